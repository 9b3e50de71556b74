import math

import pytest

import agtb


def make_sentence(heads, forms=None):
    s = agtb.Sentence()
    s.sentence_id = "py"
    tokens = []
    for i, head in enumerate(heads, start=1):
        t = agtb.Token()
        t.id = i
        t.form = forms[i - 1] if forms else f"w{i}"
        t.lemma = t.form
        t.postag = "v3spia---"
        t.head = head
        t.relation = "PRED" if head == 0 else "ADV"
        tokens.append(t)
    s.tokens = tokens
    return s


def test_conllu_round_trip():
    s = make_sentence([2, 0, 2])
    text = agtb.write_conllu([s])
    back = agtb.read_conllu(text)
    assert len(back) == 1
    assert back[0] == s
    assert agtb.validate_tree(back[0]).ok


def test_xml_reader():
    xml = (
        '<treebank><sentence id="1"><word id="1" form="x" lemma="x" '
        'postag="d--------" head="0" relation="PRED"/></sentence></treebank>'
    )
    sentences, warnings = agtb.read_agdt_xml(xml.encode())
    assert len(sentences) == 1
    assert warnings == []


def test_postag_feats():
    feats = agtb.postag_to_feats("v3spia---")
    assert ("person", "3") in feats
    assert agtb.feats_to_postag("v", feats) == "v3spia---"


def test_normalize_pipeline():
    s = make_sentence([0], forms=["δ’"])
    out, report = agtb.normalize(s)
    assert out.tokens[0].form == "δʼ"
    assert report.apostrophes_changed >= 1


def test_decode_matches_brute_force():
    scores = [
        [1.0, agtb.NEG_INF, 3.0],
        [2.0, 2.5, agtb.NEG_INF],
    ]
    heads, total = agtb.decode(scores)
    assert heads == [2, 0]
    assert total == 5.0
    assert agtb.brute_force_decode(scores) == (heads, total)


def test_evaluate_gold_vs_gold():
    corpus = [make_sentence([2, 0, 2]), make_sentence([0, 1])]
    report = agtb.evaluate(corpus, corpus)
    for value in (report.pos, report.xpos, report.feats, report.alltags,
                  report.uas, report.las, report.lemmas):
        assert value == 100.0


def test_correlated_ttest_masses():
    x = [96.1, 96.2, 96.0, 96.3, 96.1, 96.2, 96.1, 96.0, 96.2, 96.1]
    y = [95.9, 96.0, 95.8, 96.1, 96.0, 96.0, 95.9, 95.8, 96.0, 96.0]
    s = agtb.correlated_ttest(x, y)
    assert math.isclose(s.p_left + s.p_rope + s.p_right, 1.0, abs_tol=1e-9)
    swapped = agtb.correlated_ttest(y, x)
    assert swapped.p_left == s.p_right
    assert swapped.p_right == s.p_left


def test_student_t_cdf():
    assert agtb.student_t_cdf(0.0, 9) == 0.5
    assert math.isclose(agtb.student_t_cdf(1.0, 1), 0.75, abs_tol=1e-12)


def test_splits():
    corpus = [make_sentence([0]) for _ in range(20)]
    for i, s in enumerate(corpus):
        s.sentence_id = f"s{i}"
    manifest = agtb.make_splits(corpus, 7)
    assert len(manifest.test_ids) == 4
    assert len(manifest.runs) == 10
    train, val, test = agtb.materialize_split(corpus, manifest, 0)
    ids = {s.sentence_id for part in (train, val, test) for s in agtb.read_conllu(part)}
    assert ids == {f"s{i}" for i in range(20)}


def test_mini_model_smoke():
    corpus = [make_sentence([2, 0], forms=["ab", "cd"]), make_sentence([0], forms=["ba"])]
    cfg = agtb.MiniConfig()
    cfg.char_embed_dim = 3
    cfg.char_rnn_dim = 4
    cfg.token_rnn_dim = 4
    cfg.arc_dim = 3
    cfg.max_lemma_len = 3
    cfg.epochs = 2
    model, trace = agtb.train_mini(corpus, cfg)
    assert len(trace) == 2
    assert trace[1] <= trace[0] + 1e-9
    out = model.predict(corpus[0])
    assert agtb.validate_tree(out, True).ok
    assert model.grad_check(corpus[0]) < 1e-4
    blob = model.serialize()
    again = agtb.MiniModel.deserialize(blob)
    assert again.predict(corpus[0]) == out


def test_errors_are_typed():
    with pytest.raises(agtb.AgtbError):
        agtb.read_conllu("1\tonly\tthree\n")
    with pytest.raises(agtb.AgtbError):
        agtb.postag_to_feats("abc")
