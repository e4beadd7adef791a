import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from aimsel.minilang import parse
from aimsel.minilang.printer import print_tokens
from aimsel.mutagen import generate_mutants
from aimsel.selector import (
    MSP, MST, UNK, AutoencoderModel, ForestModel, PredictionCounts, SelectorConfig,
    StatementNotFound, TokenSequence, Vocab, abstract_code, annotate_and_window, embed,
    embed_many, metrics, predict, predict_many, reconstruction_accuracy, train_autoencoder,
    train_forest,
)
from aimsel.selector.autoencoder import init_params, loss_and_grads
from aimsel.selector.forest import Tree, _best_split
from conftest import CORPUS

ADD = "fn add(a:int,b:int)->int{return a+b;}"
CORPUS_FILES = sorted(CORPUS.glob("*.mini"))


# -- abstraction ---------------------------------------------------------------

def test_abstract_add():
    text, amap = abstract_code(ADD)
    assert text == "fn METHOD_1 ( VAR_1 : int , VAR_2 : int ) -> int { return VAR_1 + VAR_2 ; }"
    assert amap.backward["VAR_1"] == "a"


def test_reuse_and_literals():
    text, _ = abstract_code("fn f(x:int)->int{ // bump\n return x + 7 + x + 7; }")
    assert text.count("VAR_1") == 3 and text.count("INT_1") == 2
    assert "bump" not in text and "//" not in text


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: p.stem)
def test_abstraction_round_trip_and_idempotence(path):
    src = path.read_text()
    text, amap = abstract_code(src)
    canonical = " ".join(print_tokens(parse(src))[0])
    assert amap.restore(text) == canonical
    # re-abstracting abstract text gives the same IDs, and the result is stable
    assert abstract_code(text)[0] == text
    assert abstract_code(src)[0] == text
    # injective per type
    for kind in ("VAR", "METHOD", "INT"):
        originals = [o for (k, o) in amap.forward if k == kind]
        assert len({amap.forward[(kind, o)] for o in originals}) == len(originals)


def test_keywords_and_types_survive():
    text, _ = abstract_code(CORPUS.joinpath("binary_search.mini").read_text())
    toks = text.split()
    assert "while" in toks and "int" in toks and "return" in toks


def test_parse_failure_propagates():
    with pytest.raises(Exception):
        abstract_code("fn f( {")


# -- annotation and windowing -----------------------------------------------------

def test_annotation_shape():
    prog = parse(ADD)
    m = generate_mutants(prog, "add", ["AOR"])[0]
    seq = annotate_and_window(abstract_code(ADD)[0], m, SelectorConfig())
    assert "MST return VAR_1 + VAR_2 ; MSP AOR + -" in seq.text()
    # shorter than the window: everything kept, nothing padded
    assert len(seq.tokens) == len(abstract_code(ADD)[0].split()) + 5
    assert seq.tokens[seq.mutation_index] == MST


def test_statement_not_found():
    prog = parse(ADD)
    m = generate_mutants(prog, "add", ["AOR"])[0]
    with pytest.raises(StatementNotFound):
        annotate_and_window("fn METHOD_1 ( )", m, SelectorConfig())


def corpus_mutants():
    for path in CORPUS_FILES:
        prog = parse(path.read_text())
        text = abstract_code(path.read_text())[0]
        for m in generate_mutants(prog, path.stem):
            yield text, m


@settings(max_examples=30, deadline=None)
@given(st.integers(16, 120), st.randoms(use_true_random=False))
def test_window_properties_over_corpus(max_len, rnd):
    cases = list(corpus_mutants())
    for text, m in rnd.sample(cases, 40):
        full = annotate_and_window(text, m, SelectorConfig()).tokens
        seq = annotate_and_window(text, m, SelectorConfig(max_len=max_len))
        t = seq.tokens
        assert len(t) == min(max_len, len(full))
        assert t.count(MST) == 1 and t.count(MSP) == 1
        assert seq.mutation_index == t.index(MST) < t.index(MSP)
        # operator tail: tag plus from/to (a single token for deletions)
        tail = 2 if full[full.index(MSP) + 1] in ("STD", "ORU") else 3
        if t.index(MSP) - t.index(MST) == full.index(MSP) - full.index(MST):
            # statement kept whole: the window is a contiguous slice, centered
            off = full.index(MST) - seq.mutation_index
            assert full[off:off + len(t)] == t
            left_have = full.index(MST)
            right_have = len(full) - full.index(MSP) - 1 - tail
            left, right = seq.mutation_index, len(t) - t.index(MSP) - 1 - tail
            assert abs(left - right) <= 1 or left == left_have or right == right_have


def test_every_corpus_sequence_has_one_marker_pair():
    for text, m in corpus_mutants():
        t = annotate_and_window(text, m, SelectorConfig()).tokens
        assert t.count(MST) == 1 and t.count(MSP) == 1 and len(t) <= 500


def test_vocab_unknown_maps_to_unk():
    v = Vocab(["a", "b"])
    assert v.encode(["a", "zzz"]) == [v.stoi["a"], v.stoi[UNK]]


# -- autoencoder -------------------------------------------------------------------

def rel_error(num, ana):
    return np.linalg.norm(num - ana) / max(1e-12, np.linalg.norm(num) + np.linalg.norm(ana))


def test_gradients_match_finite_differences():
    # three-token vocabulary plus the two reserved symbols
    cfg = SelectorConfig(embedding_dim=8, token_dim=4)
    params = init_params(5, cfg, np.random.default_rng(7))
    ids = [[2, 3, 4, 3], [4, 2], [3, 3, 2]]
    _, grads = loss_and_grads(params, ids)
    eps = 1e-5
    for name, p in params.items():
        num = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + eps
            up, _ = loss_and_grads(params, ids, with_grads=False)
            p[idx] = old - eps
            down, _ = loss_and_grads(params, ids, with_grads=False)
            p[idx] = old
            num[idx] = (up - down) / (2 * eps)
        assert rel_error(num, grads[name]) <= 1e-4, name


def test_gradients_with_marker_readout():
    cfg = SelectorConfig(embedding_dim=8, token_dim=4)
    params = init_params(6, cfg, np.random.default_rng(3))
    ids = [[2, 4, 3, 5, 2], [3, 4, 2, 5], [2, 3]]
    markers = (4, 5)
    _, grads = loss_and_grads(params, ids, markers=markers)
    eps = 1e-5
    for name in ("enc_f_U", "enc_b_W", "emb"):
        p = params[name]
        num = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + eps
            up, _ = loss_and_grads(params, ids, False, markers)
            p[idx] = old - eps
            down, _ = loss_and_grads(params, ids, False, markers)
            p[idx] = old
            num[idx] = (up - down) / (2 * eps)
        assert rel_error(num, grads[name]) <= 1e-4, name


def toks(src):
    return TokenSequence(tuple(abstract_code(src)[0].split()), 0)


DESK = [toks(s) for s in (
    "fn add(a:int,b:int)->int{return a+b;}",
    "fn neg(x:int)->int{return -x;}",
    "fn inc(x:int)->int{return x+1;}",
    "fn g(p:bool)->bool{ return !p; }",
    "fn z()->int{ return 0; }",
)]


def test_single_sequence_loss_decreases():
    cfg = SelectorConfig(embedding_dim=16, token_dim=8, epochs=3)
    model = train_autoencoder(DESK[:1] * 4, cfg)
    h = model.loss_history
    assert len(h) == 3 and h[0] > h[1] > h[2]


def test_desk_corpus_reconstruction():
    assert all(len(s.tokens) <= 20 for s in DESK)
    cfg = SelectorConfig(embedding_dim=128, token_dim=32, epochs=300, batch_size=1,
                         learning_rate=0.01)
    model = train_autoencoder(DESK, cfg)
    assert reconstruction_accuracy(model, DESK) >= 0.9


def test_training_is_deterministic_and_embeds(tmp_path):
    cfg = SelectorConfig(epochs=1)
    a = train_autoencoder(DESK, cfg)
    b = train_autoencoder(DESK, cfg)
    assert all((a.params[k] == b.params[k]).all() for k in a.params)
    v = embed(a, DESK[0])
    assert v.shape == (256,) and np.isfinite(v).all()
    assert (embed(a, DESK[0]) == v).all()
    # batching changes BLAS kernel shapes, so only the last bits may differ
    assert np.allclose(embed_many(a, DESK)[0], v, rtol=1e-12, atol=1e-14)
    a.save(tmp_path / "ae.npz")
    back = AutoencoderModel.load(tmp_path / "ae.npz")
    assert (embed(back, DESK[3]) == embed(a, DESK[3])).all()
    assert back.loss_history == a.loss_history


def test_empty_corpus_rejected():
    with pytest.raises(ValueError):
        train_autoencoder([], SelectorConfig())


def test_config_validation():
    with pytest.raises(ValueError):
        SelectorConfig(max_len=15)
    with pytest.raises(ValueError):
        SelectorConfig(embedding_dim=6)


def test_distinct_corpus_sequences_get_distinct_vectors(corpus_artifacts, corpus_xval):
    by_name = {a.name: a for a in corpus_artifacts}
    for fold in corpus_xval.folds:
        names = fold.train_subjects + fold.test_subjects
        seqs = [by_name[n].sequences[m].tokens for n in names for m in by_name[n].mutant_ids]
        X = np.vstack([fold.train_X, fold.test_X])
        assert len(X) == len(seqs) == sum(len(a.mutant_ids) for a in corpus_artifacts)
        groups = {}
        for row, tokens in zip(X, seqs):
            groups.setdefault(row.tobytes(), set()).add(tokens)
        assert all(len(g) == 1 for g in groups.values())


# -- forest ------------------------------------------------------------------------

def brute_best_split(X, y, feats):
    """Exact lowest weighted Gini; ties to lower feature, then lower threshold."""
    best = None
    for f in sorted(feats):
        vals = sorted(set(X[:, f]))
        for lo, hi in zip(vals, vals[1:]):
            left = X[:, f] <= lo
            score = Fraction(0)
            for side in (left, ~left):
                n, p = int(side.sum()), int(y[side].sum())
                score += n - Fraction(p * p + (n - p) * (n - p), n)
            if best is None or score < best[0]:
                best = (score, f, (lo + hi) / 2)
    return best


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 12).flatmap(lambda n: st.tuples(
    arrays(np.int64, (n, 4), elements=st.integers(0, 3)),
    arrays(np.int64, n, elements=st.integers(0, 1)))),
    st.sets(st.integers(0, 3), min_size=1))
def test_split_matches_exact_oracle(data, feats):
    X, y = data
    X = X.astype(float)
    got = _best_split(X, y, sorted(feats))
    want = brute_best_split(X, y, feats)
    if want is None:
        assert got is None
    else:
        assert got[1:] == (want[1], want[2])
        assert math.isclose(got[0], float(want[0]), abs_tol=1e-9)


def test_all_positive_labels():
    X = np.random.default_rng(0).normal(size=(20, 9))
    model = train_forest(X, [True] * 20, seed=0)
    probe = np.random.default_rng(1).normal(size=(10, 9))
    assert all(label for label, _ in predict_many(model, probe))


def test_separable_data_fits_perfectly():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(60, 16))
    y = X[:, 5] > 0.1
    model = train_forest(X, y, seed=1)
    assert len(model.trees) == 100 and model.features_per_split == 4
    assert [label for label, _ in predict_many(model, X)] == y.tolist()


def test_forest_determinism_and_persistence(tmp_path):
    rng = np.random.default_rng(2)
    X = rng.normal(size=(50, 8))
    y = rng.random(50) < 0.4
    probe = rng.normal(size=(20, 8))
    a, b = train_forest(X, y, seed=5), train_forest(X, y, seed=5)
    assert predict_many(a, probe) == predict_many(b, probe)
    a.save(tmp_path / "f.npz")
    assert predict_many(ForestModel.load(tmp_path / "f.npz"), probe) == predict_many(a, probe)


def replay(tree: Tree, x) -> bool:
    node = 0
    while tree.feature[node] >= 0:
        node = tree.left[node] if x[tree.feature[node]] <= tree.threshold[node] else tree.right[node]
    return 2 * tree.n_pos[node] > tree.n_total[node]


def test_votes_equal_replayed_trees():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(80, 9))
    y = (X[:, 0] + rng.normal(scale=0.8, size=80)) > 0
    model = train_forest(X, y, seed=0)
    probe = rng.normal(size=(15, 9))
    for x in probe:
        n_yes = sum(replay(t, x) for t in model.trees)
        label, score = predict(model, x)
        assert score == n_yes / 100 and label == (n_yes > 50)
        assert abs(score * 100 - round(score * 100)) < 1e-9


def test_half_score_is_negative():
    leaf_yes = Tree(np.array([-1]), np.zeros(1), np.array([-1]), np.array([-1]),
                    np.array([1]), np.array([1]))
    leaf_no = Tree(np.array([-1]), np.zeros(1), np.array([-1]), np.array([-1]),
                   np.array([0]), np.array([1]))
    assert predict(ForestModel([leaf_yes, leaf_no], 2, 0), np.zeros(2)) == (False, 0.5)
    assert predict(ForestModel([leaf_yes, leaf_yes], 2, 0), np.zeros(2)) == (True, 1.0)


def test_forest_errors():
    model = train_forest(np.eye(4), [True, False, True, False], seed=0, n_trees=3)
    with pytest.raises(ValueError):
        predict(model, np.zeros(5))
    with pytest.raises(ValueError):
        train_forest(np.zeros((0, 3)), [], seed=0)


# -- metrics -----------------------------------------------------------------------

def test_metric_examples():
    p, r, mcc = metrics(PredictionCounts(tp=3, fp=1, fn=3, tn=13))
    assert (p, r) == (0.75, 0.5)
    assert mcc == pytest.approx(36 / math.sqrt(5376)) and abs(mcc - 0.4910) <= 1e-4
    assert metrics(PredictionCounts(tp=5, tn=5)) == (1.0, 1.0, 1.0)
    assert metrics(PredictionCounts(tp=5, fp=5))[2] == 0.0
    assert metrics(PredictionCounts()) == (0.0, 0.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=2, max_size=60))
def test_mcc_equals_phi_coefficient(pairs):
    pred = np.array([p for p, _ in pairs], dtype=float)
    act = np.array([a for _, a in pairs], dtype=float)
    c = PredictionCounts.from_labels(pred.astype(bool), act.astype(bool))
    assert c.total == len(pairs)
    _, _, mcc = metrics(c)
    if pred.std() == 0 or act.std() == 0:
        assert mcc == 0.0
    else:
        assert mcc == pytest.approx(np.corrcoef(pred, act)[0, 1], abs=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_independent_predictions_have_small_mcc(seed):
    rng = np.random.default_rng(seed)
    actual = rng.permutation(np.arange(1000) < 500)
    predicted = rng.random(1000) < 0.5
    assert abs(metrics(PredictionCounts.from_labels(predicted, actual))[2]) < 0.1


def test_counts_add():
    a = PredictionCounts(1, 2, 3, 4) + PredictionCounts(1, 1, 1, 1)
    assert a == PredictionCounts(2, 3, 4, 5) and a.total == 14
    with pytest.raises(ValueError):
        PredictionCounts(-1, 0, 0, 0)
