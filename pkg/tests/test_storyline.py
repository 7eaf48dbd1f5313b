import io

import numpy as np
import pytest

from core.errors import (AbsentEmbeddingError, ConstrainedSamplingError, EmptySupportError,
                         ResourceError)
from core.langmodel import TokenDistribution
from core.phonetics import load_lexicon, rhymes
from core.storyline import (SAMPLING_ORDER, Conditional, EmbeddingSpace, FinalSlotConstraint, Storyline,
                            StorylineModel, load_embeddings, load_names, sample_word_constrained,
                            similarity, storyline_violations)
from tests import fixture_data as fx


def test_load_embeddings_skips_bad_lines():
    text = "4 3\ncat 1 0 0\nhat 0 1 0\nbad 1 2\nzero 0 0 0\nnan x 1 1\n"
    space = load_embeddings(io.StringIO(text))
    assert space.words() == ["cat", "hat"]
    assert space.dimension == 3
    assert len(space.report.malformed) == 3
    with pytest.raises(AbsentEmbeddingError):
        space.vector("dog")


def test_load_embeddings_without_usable_vectors():
    with pytest.raises(ResourceError):
        load_embeddings(io.StringIO("cat 0 0\n"))


def test_space_rejects_bad_vectors():
    with pytest.raises(ValueError):
        EmbeddingSpace({"cat": [0.0, 0.0]})
    with pytest.raises(ValueError):
        EmbeddingSpace({"cat": [1.0, 0.0], "hat": [1.0, 0.0, 0.0]})


def test_similarity_range():
    space = EmbeddingSpace({"a": [1.0, 0.0], "b": [-1.0, 0.0], "c": [0.0, 2.0]})
    assert similarity(space, "a", "a") == pytest.approx(1.0)
    assert similarity(space, "a", "b") == pytest.approx(0.0)
    assert similarity(space, "a", "c") == pytest.approx(0.5)


def test_load_names(lexicon):
    names = load_names(io.StringIO("Kay,F\nzelda,F\nDAN,M\nkay,F\n"), lexicon)
    assert names.names == ("kay", "dan")
    assert names.genders == {"kay": "F", "dan": "M"}
    assert "Kay" in names
    with pytest.raises(ResourceError):
        load_names(io.StringIO("zelda\n"), lexicon)


def test_candidates(storyline_model):
    assert "cake" in storyline_model.candidates
    assert "kay" not in storyline_model.candidates
    assert list(storyline_model.candidates) == sorted(storyline_model.candidates)


def test_similarity_conditional_is_proportional(storyline_model, space):
    dist = storyline_model.conditional(Conditional.Y2, {"y0": "money"})
    assert dist.total() == pytest.approx(1.0)
    assert "money" not in dist.support
    a, b = "cake", "night"
    expected = similarity(space, a, "money") / similarity(space, b, "money")
    assert dist.prob(a) / dist.prob(b) == pytest.approx(expected)


def test_exclusions(storyline_model):
    dist = storyline_model.conditional(Conditional.Y3, {"y0": "money", "y2": "day"}, exclude=["cake"])
    assert "cake" not in dist.support
    assert "day" not in dist.support


def test_rhyme_conditionals(storyline_model, lexicon):
    given = {"y0": "money", "y2": "day", "y3": "cat"}
    y4 = storyline_model.conditional(Conditional.Y4, given)
    assert y4.support and all(rhymes(lexicon, w, "cat") for w in y4.support)
    assert "hat" in y4.support
    y5 = storyline_model.conditional(Conditional.Y5, given)
    assert y5.support and all(rhymes(lexicon, w, "day") for w in y5.support)
    y1 = storyline_model.conditional(Conditional.Y1, {"y5": "hat"})
    assert set(y1.support) == {"pat", "matt"}
    assert y1.prob("pat") == pytest.approx(0.5)


def test_conditional_errors(storyline_model):
    with pytest.raises(ValueError):
        storyline_model.conditional(Conditional.Y4, {"y0": "money"})
    with pytest.raises(EmptySupportError):
        storyline_model.conditional(Conditional.Y4, {"y0": "money", "y2": "day", "y3": "money"})


def test_conditional_names():
    assert [k.slot for k in SAMPLING_ORDER] == ["y2", "y3", "y4", "y5", "y1"]
    assert Conditional.Y4.requires == ("y0", "y2", "y3")


def test_lookahead(storyline_model):
    assert storyline_model.rhyme_partners("hat", names=True) == ("matt", "pat")
    assert "mill" in storyline_model.rhyme_partners("hill")
    y2 = storyline_model.lookahead(Conditional.Y2, {"y0": "money"})
    assert y2("cat")
    assert not y2("happy")
    given = {"y0": "money", "y2": "hill", "y3": "mill"}
    # taking "pill" for y4 would leave y5 nothing that rhymes with "hill"
    assert not storyline_model.lookahead(Conditional.Y4, given)("pill")
    given = {"y0": "money", "y2": "hill", "y3": "cat"}
    assert storyline_model.lookahead(Conditional.Y4, given)("hat")


def test_completable(storyline_model):
    assert storyline_model.completable({"y0": "money"})
    assert storyline_model.completable({"y0": "money", "y2": "cat", "y3": "hill"})
    assert not storyline_model.completable({"y0": "money", "y2": "cat", "y3": "cat"})
    full = {"y0": "money", "y2": "cat", "y3": "hill", "y4": "mill", "y5": "hat"}
    assert storyline_model.completable(full)
    assert storyline_model.lookahead(Conditional.Y1, full)("pat")
    assert not storyline_model.lookahead(Conditional.Y1, full)("jill")
    # with "mill" and "pill" taken nothing is left to rhyme with "hill" in line 5
    assert not storyline_model.completable({"y0": "money", "y2": "hill", "y3": "mill", "y4": "pill"})


NON_TRANSITIVE_DICT = (
    "MONEY  M AH1 N IY0\n"
    "RED  R EH1 D\n"
    "LED  L EH1 D\n"
    "LED(2)  L IY1 D\n"
    "CAT  K AE1 T\n"
    "HAT  HH AE1 T\n"
    "NED  N EH1 D\n"
    "REED  R IY1 D\n"
)


@pytest.fixture(scope="module")
def two_voiced_model():
    lexicon = load_lexicon(io.StringIO(NON_TRANSITIVE_DICT))
    space = EmbeddingSpace({"money": [1.0, 0.0], "red": [1.0, 1.0], "led": [0.0, 1.0],
                            "cat": [1.0, -0.5], "hat": [0.5, 1.0]})
    names = load_names(io.StringIO("ned\nreed\n"), lexicon)
    return StorylineModel(lexicon, space, names)


def test_name_rhymes_with_both_partners(two_voiced_model):
    # "led" has two pronunciations, so "reed" rhymes with it but not with "red"
    dist = two_voiced_model.conditional(Conditional.Y1, {"y0": "money", "y2": "red", "y5": "led"})
    assert set(dist.support) == {"ned"}
    model = two_voiced_model
    for seed in range(200):
        story = model.sample_storyline("money", rng_seed=seed)
        assert storyline_violations(story, model.lexicon, model.names) == []
        assert story.finals[0] == "ned"


@pytest.mark.parametrize("prompt", fx.PROMPTS[:5])
def test_sampled_storylines_are_valid(storyline_model, lexicon, names, prompt):
    story = storyline_model.sample_storyline(prompt, rng_seed=3)
    assert storyline_violations(story, lexicon, names) == []
    assert story.as_dict()["y0"] == prompt
    assert len(set(story.finals)) == 5
    assert story.provenance["y4"] == Conditional.Y4.value


def test_sampling_is_deterministic(storyline_model):
    first = storyline_model.sample_storyline("winter", rng_seed=11)
    again = storyline_model.sample_storyline("winter", rng_seed=11)
    assert first.finals == again.finals
    greedy = storyline_model.sample_storyline("winter", rng_seed=1, argmax=True)
    assert greedy.finals == storyline_model.sample_storyline("winter", rng_seed=2, argmax=True).finals


def test_violations_reported(lexicon, names):
    story = Storyline("money", ("cake", "day", "cat", "hat", "way"))
    problems = storyline_violations(story, lexicon, names)
    assert any("'cake' is not a known name" in p for p in problems)


def test_constrained_sampling_skips_rejected_words():
    dist = TokenDistribution({"a": 0.9, "b": 0.1}, 0)
    for seed in range(20):
        result = sample_word_constrained(dist, lambda w: w == "b", max_attempts=2, rng_seed=seed)
        assert result.word == "b"
        assert result.attempts <= 2


def test_constrained_sampling_argmax():
    dist = TokenDistribution({"a": 0.2, "b": 0.5, "c": 0.3}, 0)
    assert sample_word_constrained(dist, lambda w: True, argmax=True).word == "b"
    result = sample_word_constrained(dist, lambda w: w != "b", argmax=True)
    assert (result.word, result.attempts) == ("c", 2)


def test_constrained_sampling_exhaustion():
    dist = TokenDistribution({"a": 0.5, "b": 0.5}, 0)
    with pytest.raises(ConstrainedSamplingError) as err:
        sample_word_constrained(dist, lambda w: False, max_attempts=10, rng_seed=0)
    assert err.value.attempts == 2
    with pytest.raises(ConstrainedSamplingError) as err:
        sample_word_constrained(TokenDistribution({"a": 1.0, "b": 1.0, "c": 1.0}, 0),
                                lambda w: False, max_attempts=1)
    assert err.value.attempts == 1
    with pytest.raises(ValueError):
        sample_word_constrained(dist, lambda w: True, max_attempts=0)


def test_constrained_sampling_follows_distribution():
    dist = TokenDistribution({"a": 0.8, "b": 0.2}, 0)
    draws = [sample_word_constrained(dist, lambda w: True, rng_seed=s).word for s in range(400)]
    assert 0.7 < np.mean([d == "a" for d in draws]) < 0.9


def test_final_slot_constraint(lexicon, tag_lexicon, meter):
    slot = FinalSlotConstraint("NN", 2, 8, lexicon, tag_lexicon, meter)
    assert slot("cat")
    assert not slot("money")
    assert not slot("ate")
    assert not slot("zebra")
    two = FinalSlotConstraint("NN", 3, 4, lexicon, tag_lexicon, meter)
    assert not two("money")
    assert not two("cat")


def test_model_needs_overlap(lexicon, space, names):
    with pytest.raises(ResourceError):
        StorylineModel(lexicon, space, names, vocabulary=["zebra"])


@pytest.mark.slow
@pytest.mark.parametrize("prompt", fx.PROMPTS)
def test_every_sample_is_valid(storyline_model, lexicon, names, prompt):
    for seed in range(1000):
        story = storyline_model.sample_storyline(prompt, rng_seed=seed)
        assert storyline_violations(story, lexicon, names) == [], (prompt, seed)
        assert len(set(story.finals)) == 5


@pytest.mark.parametrize("prompt", fx.PROMPTS)
def test_conditionals_are_proper(storyline_model, prompt):
    story = storyline_model.sample_storyline(prompt, rng_seed=3).as_dict()
    given = {"y0": prompt}
    for kind in SAMPLING_ORDER:
        dist = storyline_model.conditional(kind, given)
        assert sum(dist.support.values()) == pytest.approx(1.0, abs=1e-9)
        assert all(p > 0 for p in dist.support.values())
        given[kind.slot] = story[kind.slot]


def test_scaled_vectors_leave_storylines_unchanged(storyline_model, lexicon, space, names, ngram_model):
    scaled = EmbeddingSpace({w: space.vector(w) * 3.5 for w in space.words()})
    model = StorylineModel(lexicon, scaled, names, ngram_model.predictable)
    for prompt in fx.PROMPTS[:4]:
        ours = model.conditional(Conditional.Y2, {"y0": prompt}).support
        theirs = storyline_model.conditional(Conditional.Y2, {"y0": prompt}).support
        assert set(ours) == set(theirs)
        assert [ours[w] for w in theirs] == pytest.approx(list(theirs.values()))
        assert (model.sample_storyline(prompt, 0, argmax=True).finals
                == storyline_model.sample_storyline(prompt, 0, argmax=True).finals)
