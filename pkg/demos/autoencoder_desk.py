"""Train the sequence autoencoder on a handful of short sequences.

Shows the loss curve, the reconstruction and the fixed-length embedding.
"""
from aimsel.selector import (
    SelectorConfig, TokenSequence, abstract_code, embed, reconstruct, reconstruction_accuracy, train_autoencoder,
)

sources = [
    "fn add(a:int,b:int)->int{return a+b;}",
    "fn neg(x:int)->int{return -x;}",
    "fn inc(x:int)->int{return x+1;}",
    "fn g(p:bool)->bool{ return !p; }",
    "fn z()->int{ return 0; }",
]
# abstract identifiers first, the same way corpus mutants are tokenized
seqs = [TokenSequence(tuple(abstract_code(src)[0].split()), 0) for src in sources]

cfg = SelectorConfig(embedding_dim=128, token_dim=32, epochs=300, batch_size=1,
                     learning_rate=0.01)
model = train_autoencoder(seqs, cfg)
hist = model.loss_history
for ep in (0, 1, 2, 49, 149, len(hist) - 1):
    print(f"epoch {ep + 1:3d}  loss {hist[ep]:.4f}")

print("token accuracy:", reconstruction_accuracy(model, seqs))
print("input :", seqs[0].text())
print("output:", " ".join(reconstruct(model, seqs[0])))
z = embed(model, seqs[0])
print("embedding length", len(z), "first values", [round(float(v), 3) for v in z[:4]])
