"""One subject, end to end: mutate, infer assertions, label AIMs, subsume.

Run with ``python demos/walkthrough.py [subject]`` (default ``clamp``).
"""
import sys

from aimsel.harness import ExperimentConfig, analyze_subject, bundled_path, load_subject
from aimsel.mutfilter import infer, infer_with_subset

name = sys.argv[1] if len(sys.argv) > 1 else "clamp"
subject = load_subject(bundled_path("corpus") / f"{name}.mini")
art = analyze_subject(subject, ExperimentConfig())

print(f"{name}: {len(art.mutant_ids)} mutants, {art.n_tests} tests")
full = infer(art.amatrix).inferred
print(f"assertions inferred with every mutant: {len(full)}")
for a in full[:5]:
    print("   ", a.text)

# the AIMs alone infer the same set
aims = sorted(art.aims)
print(f"AIMs: {len(aims)} of {len(art.mutant_ids)}")
same = {a.text for a in infer_with_subset(art.amatrix, aims)} == {a.text for a in full}
print("AIMs infer the same assertions:", same)

for m in art.mutants:
    if m.id in art.aims:
        op = m.operator
        print(f"example AIM: #{m.id} {op.tag} {op.from_token!r} -> {op.to_token!r}")
        print("  sequence:", " ".join(art.sequences[m.id].tokens[:40]), "...")
        break

tops = art.subsuming
print(f"subsuming mutants: {len(tops)}, graph nodes: {len(art.graph.nodes)}, "
      f"edges: {len(art.graph.edges)}")
print("AIMs that are also subsuming:", len(tops & art.aims))
