"""Session loop: priors, query rounds, oracle, full simulations."""

import pytest

from kbdiag.diag import leading_diagnoses
from kbdiag.dpi import make_dpi
from kbdiag.logic import parse_formula
from kbdiag.session import (Session, SessionConfig, SessionError,
                            SessionFinished, SimulatedOracle, diagnosis_priors,
                            run_simulation)


def reprob(dpi, probs):
    return make_dpi(dpi.kb, dpi.background, dpi.positive, dpi.negative, probs)


# ---------------------------------------------------------------------------
# Priors


def test_priors_uniform_when_probs_equal(ex1):
    d = leading_diagnoses(ex1, 3)
    priors = diagnosis_priors(d, ex1)
    assert priors == pytest.approx({0: 1 / 3, 1: 1 / 3, 2: 1 / 3})


def test_priors_skewed_towards_cheap_faults(ex1):
    # weights: .5*.1*.9*.9*.5 / .5*.9*.1*.9*.5 / .5*.9*.1*.1*.5
    dpi = reprob(ex1, {1: 0.5, 2: 0.1, 3: 0.1, 4: 0.1, 5: 0.5})
    d = leading_diagnoses(dpi, 3)
    assert [sorted(x.ids) for x in d] == [[1, 2, 5], [1, 3, 5], [3, 4, 5]]
    priors = diagnosis_priors(d, dpi)
    assert priors == pytest.approx({0: 9 / 19, 1: 9 / 19, 2: 1 / 19})


def test_priors_half_quarter_quarter(ex1):
    dpi = reprob(ex1, {1: 0.3, 2: 0.4, 3: 0.25, 4: 0.3, 5: 0.3})
    d = leading_diagnoses(dpi, 3)
    priors = diagnosis_priors(d, dpi)
    assert priors == pytest.approx({0: 0.5, 1: 0.25, 2: 0.25})


def test_priors_need_a_diagnosis(ex1):
    with pytest.raises(ValueError):
        diagnosis_priors([], ex1)


# ---------------------------------------------------------------------------
# Config


def test_config_validation():
    for bad in (dict(n=0), dict(measure="gini"), dict(criterion="size"),
                dict(rank="alpha"), dict(sigma=0.0), dict(sigma=1.5),
                dict(threshold=-0.1), dict(budget=0)):
        with pytest.raises(ValueError):
            SessionConfig(**bad)
    cfg = SessionConfig()
    assert (cfg.n, cfg.measure, cfg.criterion, cfg.enrich) == (3, "ent", "card", False)


# ---------------------------------------------------------------------------
# The two-round walkthrough


def test_walkthrough_round_one(ex1):
    s = Session(ex1, SessionConfig(sigma=1.0))
    plan = s.next_query()
    assert plan.round == 1
    assert plan.texts() == ["B | F -> H"]
    assert plan.explicit_ids == frozenset({3})
    assert plan.implicit == ()
    assert sorted(plan.node.dplus) == [0]
    assert sorted(plan.node.dminus) == [1, 2]
    assert plan.measure_value == pytest.approx(0.0817041659455104)
    assert not plan.goal_met
    assert plan.reasoner_calls["p1"] == 0
    assert plan.reasoner_calls["p2"] == 0


def test_pending_query_is_cached(ex1):
    s = Session(ex1, SessionConfig(sigma=1.0))
    assert s.next_query() is s.next_query()


def test_walkthrough_full_session(ex1):
    s = Session(ex1, SessionConfig(sigma=1.0))
    row = None
    s.next_query()
    row = s.submit_answer(False)
    assert row["eliminated"] == [[1, 2, 5]]
    assert row["qpartition"] == {"dplus": [[1, 2, 5]],
                                 "dminus": [[1, 3, 5], [3, 4, 5]],
                                 "dzero": []}
    assert [sorted(d.ids) for d in s.diagnoses] == [[1, 3, 5], [3, 4, 5]]
    assert s.priors == pytest.approx({0: 0.5, 1: 0.5})
    assert not s.is_finished()

    plan = s.next_query()
    assert plan.texts() == ["L -> H"]
    assert plan.measure_value == pytest.approx(0.0)
    assert plan.goal_met
    row = s.submit_answer(False)
    assert row["eliminated"] == [[1, 3, 5]]
    assert s.is_finished()
    assert sorted(s.final_diagnosis().ids) == [3, 4, 5]
    with pytest.raises(SessionFinished):
        s.next_query()


def test_submit_without_pending(ex1):
    s = Session(ex1, SessionConfig(sigma=1.0))
    with pytest.raises(SessionError):
        s.submit_answer(True)


def test_yes_answer_eliminates_d_minus(ex1):
    s = Session(ex1, SessionConfig(sigma=1.0))
    s.next_query()  # <{D1}, {D2, D3}> asking B | F -> H
    row = s.submit_answer(True)
    assert row["eliminated"] == [[1, 3, 5], [3, 4, 5]]
    assert s.is_finished()
    assert sorted(s.final_diagnosis().ids) == [1, 2, 5]


def test_transcript_schema(ex1):
    s = Session(ex1, SessionConfig(sigma=1.0))
    s.next_query()
    row = s.submit_answer(False)
    assert set(row) == {"round", "query", "qpartition", "answer", "eliminated",
                        "measure_value", "timings_ms", "reasoner_calls"}
    assert set(row["timings_ms"]) == {"p1", "p2", "p3", "p4"}
    assert set(row["reasoner_calls"]) == {"p1", "p2", "p3", "p4"}
    assert row["answer"] is False
    assert row["round"] == 1
    assert all(t >= 0.0 for t in row["timings_ms"].values())


# ---------------------------------------------------------------------------
# Enrichment inside a session


def test_enriched_session_first_round(ex1):
    s = Session(ex1, SessionConfig(enrich=True, sigma=1.0))
    plan = s.next_query()
    assert plan.texts() == ["F -> H"]
    assert plan.explicit_ids == frozenset()
    assert [str(f) for f in plan.implicit] == ["F -> H"]
    assert plan.ent_t_calls == 2
    assert plan.reasoner_calls["p1"] == 0
    assert plan.reasoner_calls["p2"] == 0
    assert plan.reasoner_calls["p3"] > 0
    assert plan.reasoner_calls["p4"] > 0

    # the surrogate must split the diagnoses exactly like B | F -> H
    row = s.submit_answer(False)
    assert row["eliminated"] == [[1, 2, 5]]
    assert [sorted(d.ids) for d in s.diagnoses] == [[1, 3, 5], [3, 4, 5]]


def test_enriched_session_converges(ex1):
    res = run_simulation(ex1, {3, 4, 5}, SessionConfig(enrich=True, sigma=1.0))
    assert res.hit
    assert res.rounds == 2
    assert res.reasoner_calls["p1"] == 0
    assert res.reasoner_calls["p2"] == 0


# ---------------------------------------------------------------------------
# Early stop on the posterior


def test_sigma_stops_before_any_query(ex1):
    dpi = reprob(ex1, {1: 0.01, 2: 0.01, 3: 0.9, 4: 0.9, 5: 0.9})
    s = Session(dpi)  # default sigma 0.95
    assert s.is_finished()
    assert sorted(s.final_diagnosis().ids) == [3, 4, 5]
    assert not s.ambiguous
    with pytest.raises(SessionFinished):
        s.next_query()


def test_sigma_one_needs_certainty(ex1):
    dpi = reprob(ex1, {1: 0.01, 2: 0.01, 3: 0.9, 4: 0.9, 5: 0.9})
    s = Session(dpi, SessionConfig(sigma=1.0))
    assert not s.is_finished()


# ---------------------------------------------------------------------------
# Oracle


def test_oracle_answers_from_planted_truth(ex1):
    oracle = SimulatedOracle(ex1, {3, 4, 5})
    assert oracle.answer([parse_formula("A -> B & L")]) is True
    assert oracle.answer([parse_formula("B | F -> H")]) is False
    assert oracle.answer([parse_formula("F -> H")]) is False
    with pytest.raises(ValueError):
        oracle.answer([])


def test_oracle_rejects_non_diagnoses(ex1):
    with pytest.raises(ValueError):
        SimulatedOracle(ex1, {1, 2})  # leaves the faulty rest intact
    with pytest.raises(ValueError):
        SimulatedOracle(ex1, {5})  # not hitting the other conflicts
    with pytest.raises(ValueError):
        SimulatedOracle(ex1, {99})


# ---------------------------------------------------------------------------
# Simulations


@pytest.mark.parametrize("measure", ["ent", "spl"])
@pytest.mark.parametrize("target", [{1, 2, 5}, {1, 3, 5}, {3, 4, 5}])
def test_simulation_lands_on_target(ex1, measure, target):
    cfg = SessionConfig(measure=measure, sigma=1.0)
    res = run_simulation(ex1, target, cfg)
    assert res.hit
    assert sorted(res.final.ids) == sorted(target)
    assert res.rounds == len(res.answers) == len(res.transcript)
    assert res.reasoner_calls["p1"] == 0
    assert res.reasoner_calls["p2"] == 0


def test_walkthrough_simulation_transcript(ex1):
    res = run_simulation(ex1, {3, 4, 5}, SessionConfig(sigma=1.0))
    assert res.rounds == 2
    assert res.answers == (False, False)
    assert [row["query"] for row in res.transcript] == [["B | F -> H"], ["L -> H"]]
    assert [row["round"] for row in res.transcript] == [1, 2]
    assert not res.ambiguous


def test_random_measure_is_seeded(ex1):
    cfg = SessionConfig(measure="random", seed=7, sigma=1.0)
    first = Session(ex1, cfg).next_query()
    second = Session(ex1, cfg).next_query()
    assert first.texts() == second.texts()
    assert first.reasoner_calls["p1"] == 0
    assert not first.goal_met


@pytest.mark.parametrize("seed", range(5))
def test_random_measure_simulations_converge(ex1, seed):
    cfg = SessionConfig(measure="random", seed=seed, sigma=1.0)
    res = run_simulation(ex1, {1, 3, 5}, cfg)
    assert res.hit


def test_prob_rank_orders_priors(ex1):
    dpi = reprob(ex1, {2: 0.05, 4: 0.9})
    s = Session(dpi, SessionConfig(rank="prob", sigma=1.0))
    vals = [s.priors[i] for i in range(len(s.diagnoses))]
    assert vals == sorted(vals, reverse=True)
    assert sorted(s.diagnoses[0].ids) == [3, 4, 5]
