import math

import numpy as np
import pytest

import plkit


def toy():
    inv = plkit.TokenInventory(["<blank>", "</s>", "|", "a", "b", "c", "t"])
    lex = plkit.Lexicon("cat\tc a t |\nbat\tb a t |\ntab\tt a b |\n", inv)
    lm = plkit.train_lm([["cat", "bat"], ["tab", "cat"], ["bat"]], order=2)
    return inv, lex, lm


def spell(inv, words):
    ids = []
    for w in words:
        ids += [inv.find(ch) for ch in w] + [inv.find("|")]
    return ids


def test_decode_noiseless():
    inv, lex, lm = toy()
    em = plkit.synth_emissions(spell(inv, ["bat", "cat"]), inv, noise=0.0, seed=1)
    opt = plkit.DecodeOptions()
    opt.lm_weight = 0.5
    opt.nbest = 3
    best = plkit.decode_ctc(em, inv, lex, lm, opt)
    assert best[0].words == ["bat", "cat"]
    assert best[0].char_len == 7
    assert plkit.wer(["bat", "cat"], best[0].words).wer == 0.0


def test_emissions_numpy_round_trip():
    rows = np.log(np.full((3, 4), 0.25, dtype=np.float32))
    em = plkit.Emissions(rows)
    em.validate()
    assert em.frames == 3 and em.vocab == 4
    assert np.allclose(em.numpy(), rows)
    with pytest.raises(ValueError):
        plkit.Emissions(np.zeros((2, 3), dtype=np.float32)).validate()


def test_lm_arpa_and_perplexity():
    _, _, lm = toy()
    text = lm.to_arpa()
    again = plkit.arpa_from_text(text)
    assert again.to_arpa() == text
    assert plkit.perplexity(lm, [["cat", "bat"]]) > 1.0
    assert math.isclose(lm.score_sentence(["cat"]), again.score_sentence(["cat"]))


def test_rescore_and_grid():
    a = plkit.NBestEntry()
    a.words, a.am_score, a.char_len = ["x"], -1.0, 1
    b = plkit.NBestEntry()
    b.words, b.am_score, b.char_len = ["y"], -2.0, 1
    top = plkit.rescore([a, b], [-5.0, -1.0], [0.0, 0.0], alpha1=1.0)
    assert top[0].words == ["y"]
    assert plkit.planned_evaluations("rescore-ctc-grid") == 847


def test_corpus_and_chunks():
    assert plkit.normalize_title("A Tale, of TWO cities!") == ["a", "tale", "of", "two", "cities"]
    assert plkit.word_levenshtein(["a", "b"], ["b"]) == 1
    r = plkit.filter_corpus([("1", "Moby Dick"), ("2", "Emma")], [("9", "moby  dick!")])
    assert r["kept"] == {"2"} and r["removed_by_title"] == {"1"}
    chunks = plkit.chunk_intervals([(0.0, 80.0)])
    assert [round(e - s, 6) for s, e in chunks] == [36.0, 36.0, 8.0]


def test_probe_unigram_is_order_blind():
    corpus = [["a", "b", "c"], ["c", "a"], ["b", "b", "a", "c"]]
    lm = plkit.train_lm(corpus, order=1)
    orig, shuffled = plkit.perplexity_probe(lm, corpus, seed=3, trials=4)
    assert all(p == orig for p in shuffled)
