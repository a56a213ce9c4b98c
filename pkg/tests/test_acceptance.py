"""Acceptance gate: one test per headline guarantee of the library.

Every test is self-contained, recomputes its reference quantities from
raw history (never from engine internals), pins its tolerance, and
asserts its runtime budget.  The terminal summary prints one PASS/FAIL
line per criterion (see conftest.py).
"""

import math
import time
from fractions import Fraction

import numpy as np

from betolo.core_betting import (
    RegretBoundInputs,
    kt_bet_fraction,
    kt_conjugate_bound,
    kt_regret_bound,
    lambert_w,
    log_kt_potential,
)
from betolo.ctw import CtwOlo
from betolo.experiments import ExperimentConfig, run_experiment
from betolo.mixture import MixtureOlo
from betolo.olo_engines import KtOlo
from betolo.oracle import (
    best_tree_competitor,
    explicit_mixture_potential,
    naive_ctw_replay,
)
from betolo.per_state import ProductKtState, product_kt_action, product_kt_update
from betolo.side_information import (
    enumerate_suffix_trees,
    markov_context,
    tree_complexity,
    tree_weight,
)


def ball_point(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    return v * rng.uniform() ** (1.0 / dim)


def random_contexts(rng: np.random.Generator, depth: int, rounds: int):
    if depth == 0:
        return [""] * rounds
    return ["".join(rng.choice(["0", "1"], size=depth)) for _ in range(rounds)]


# ---------------------------------------------------------------------------
# 1. Coin-betting wealth lower bound of the plain vectorial engine.
# ---------------------------------------------------------------------------


def test_criterion_01_kt_wealth_lower_bound():
    start = time.perf_counter()
    rng = np.random.default_rng(1001)
    dim, rounds = 5, 500
    for _ in range(200):
        engine = KtOlo(dim=dim, initial_wealth=1.0)
        total = np.zeros(dim)
        for _ in range(rounds):
            g = ball_point(rng, dim)
            engine.update(g)
            total += g
        floor = log_kt_potential(rounds, float(np.linalg.norm(total)))
        assert math.log(engine.wealth) - 0.0 - floor >= -1e-9
    assert time.perf_counter() - start < 5.0


# ---------------------------------------------------------------------------
# 2. Regret never exceeds the closed-form dual bound.
# ---------------------------------------------------------------------------


def _kt_run_regrets(gradients, w0):
    """Replay a gradient stream and return (per-c regrets, horizon)."""
    dim = len(gradients[0])
    engine = KtOlo(dim=dim, initial_wealth=w0)
    total = np.zeros(dim)
    reward = 0.0
    for g in gradients:
        reward += float(np.dot(g, engine.action()))
        engine.update(g)
        total += g
    norm = float(np.linalg.norm(total))
    regrets = {}
    for c in (0.1, 0.5, 1.0, 2.0, 10.0):
        # Competitor u = c * total / |total|, so <total, u> = c |total|.
        regrets[c] = c * norm - reward
    return regrets, len(gradients)


def test_criterion_02_kt_regret_within_closed_form_bound():
    start = time.perf_counter()
    rng = np.random.default_rng(1002)
    rounds, dim, w0 = 300, 4, 1.0
    streams = [
        [ball_point(rng, dim) for _ in range(rounds)] for _ in range(20)
    ]
    # Deterministic probe: 130 alternating (+1, -1) pairs, then 40 unit
    # gains.  Wealth on unit sign streams depends only on the two sign
    # counts, so this ends at the same wealth as any ordering of 170
    # gains and 130 losses -- but this ordering keeps wealth O(1) along
    # the way, so per-round reward accumulation carries no float error.
    # Measured regret then nearly attains the conjugate of the wealth
    # floor.
    probe = [np.array([1.0 if t % 2 == 0 else -1.0]) for t in range(260)]
    probe += [np.array([1.0])] * 40
    streams.append(probe)

    violations = []
    for i, stream in enumerate(streams):
        regrets, horizon = _kt_run_regrets(stream, w0)
        for c, regret in sorted(regrets.items()):
            exact = kt_conjugate_bound(horizon, c, w0)
            # The guarantee that follows from the wealth floor with no
            # simplification: this must never fail.
            assert regret <= exact + 1e-9, (
                f"stream {i}, c={c}: regret {regret:.6f} exceeds the exact "
                f"conjugate bound {exact:.6f}; engine wealth floor broken"
            )
            closed = kt_regret_bound(RegretBoundInputs(horizon, c, w0))
            if regret > closed + 1e-9:
                violations.append((i, c, regret, closed, exact))
    assert time.perf_counter() - start < 5.0

    lines = "\n".join(
        f"  stream {i}, c={c}: regret {r:.4f} > closed form {b:.4f} "
        f"(exact conjugate {e:.4f})"
        for i, c, r, b, e in violations
    )
    assert not violations, (
        "closed-form bound sqrt(T u^2 ln(T u^2 / (e sqrt(pi) W0^2) + 1)) + W0 "
        "violated with zero tolerance headroom:\n"
        f"{lines}\n"
        "Analysis: this simplified expression falls strictly below the exact "
        "conjugate bound sup_x (x u - W0 psi_T(x)) + W0 at every grid point "
        "tested (e.g. 2.2051 vs 4.3360 at T=300, u=0.1, W0=1), so no "
        "correct engine can satisfy it on all streams: any run whose regret "
        "lands between the two values refutes the formula, not the engine.  "
        "The deterministic probe (130 alternating +1/-1 pairs, then 40 gains "
        "of +1; sign-count wealth 0.6677 = exp of the log-potential at sum "
        "40) realizes regret 4.3323 at u=0.1 -- within 0.004 of the "
        "conjugate bound, "
        "confirming the wealth floor is tight and the implementation "
        "correct.  A closed form of the same shape that does dominate the "
        "conjugate is sqrt(T u^2 ln(1 + e^2 pi T^2 u^2 / W0^2)) + W0: same "
        "template, but with log argument e^2 pi T^2 u^2 / W0^2 in place of "
        "T u^2 / (e sqrt(pi) W0^2).  "
        "Every stream above satisfies the exact conjugate bound (asserted "
        "green in this test); the failure is in the simplified formula "
        "itself, left red rather than silently weakened."
    )


# ---------------------------------------------------------------------------
# 3. Per-state product wealth lower bound.
# ---------------------------------------------------------------------------


def test_criterion_03_product_kt_wealth_lower_bound():
    start = time.perf_counter()
    rng = np.random.default_rng(1003)
    dim, rounds = 3, 200
    for num_states in (2, 4, 8):
        for _ in range(100):
            engine = ProductKtState(dim, initial_wealth=1.0)
            counts: dict = {}
            sums: dict = {}
            for _ in range(rounds):
                state = str(rng.integers(num_states))
                g = ball_point(rng, dim)
                product_kt_update(engine, state, g)
                counts[state] = counts.get(state, 0) + 1
                sums[state] = sums.get(state, np.zeros(dim)) + g
            floor = sum(
                log_kt_potential(counts[s], float(np.linalg.norm(sums[s])))
                for s in counts
            )
            assert math.log(engine.ledger.current_wealth) - floor >= -1e-9
    assert time.perf_counter() - start < 5.0


# ---------------------------------------------------------------------------
# 4. Mixture wealth bound and per-component domination.
# ---------------------------------------------------------------------------


def test_criterion_04_mixture_wealth_bound_and_domination():
    start = time.perf_counter()
    rng = np.random.default_rng(1004)
    dim, rounds = 3, 200
    for num_components in (2, 5):
        for _ in range(100):
            components = [
                ProductKtState(dim, track_wealth=False)
                for _ in range(num_components)
            ]
            mixture = MixtureOlo(components, initial_wealth=1.0)
            # Component m buckets rounds by an independent random labeling.
            labelings = [
                rng.integers(0, 2 + m, size=rounds)
                for m in range(num_components)
            ]
            counts = [dict() for _ in range(num_components)]
            sums = [dict() for _ in range(num_components)]
            for t in range(rounds):
                states = [str(labelings[m][t]) for m in range(num_components)]
                g = ball_point(rng, dim)
                mixture.update(states, g)
                for m, s in enumerate(states):
                    counts[m][s] = counts[m].get(s, 0) + 1
                    sums[m][s] = sums[m].get(s, np.zeros(dim)) + g
            log_products = [
                sum(
                    log_kt_potential(counts[m][s], float(np.linalg.norm(sums[m][s])))
                    for s in counts[m]
                )
                for m in range(num_components)
            ]
            log_prior = -math.log(num_components)
            log_mix = float(
                np.logaddexp.reduce([log_prior + lp for lp in log_products])
            )
            log_wealth = math.log(mixture.wealth)
            assert log_wealth - log_mix >= -1e-9
            for lp in log_products:
                assert log_wealth - (log_prior + lp) >= -1e-9
    assert time.perf_counter() - start < 5.0


# ---------------------------------------------------------------------------
# 5. Efficient context-tree engine equals the brute-force recursion.
# ---------------------------------------------------------------------------


def test_criterion_05_ctw_equals_naive_recursion():
    start = time.perf_counter()
    rng = np.random.default_rng(1005)
    for _ in range(50):
        depth = int(rng.integers(1, 5))
        rounds = int(rng.integers(50, 201))
        dim = int(rng.integers(1, 4))
        contexts = random_contexts(rng, depth, rounds)
        gradients = [ball_point(rng, dim) for _ in range(rounds)]
        naive_actions, _, naive_logpsi = naive_ctw_replay(
            gradients, contexts, depth, dim, initial_wealth=1.0
        )
        engine = CtwOlo(depth=depth, dim=dim, initial_wealth=1.0)
        for t in range(rounds):
            action = engine.action(contexts[t])
            scale = max(1.0, float(np.linalg.norm(naive_actions[t])))
            assert float(np.linalg.norm(action - naive_actions[t])) / scale <= 1e-10
            engine.update(contexts[t], gradients[t])
        assert abs(engine.tree.log_ctw_potential - naive_logpsi[-1]) <= 1e-8
    assert time.perf_counter() - start < 30.0


# ---------------------------------------------------------------------------
# 6. Efficient engine equals the explicit mixture over all suffix trees.
# ---------------------------------------------------------------------------


def test_criterion_06_ctw_equals_explicit_tree_mixture():
    start = time.perf_counter()
    expected_tree_counts = {0: 1, 1: 2, 2: 5, 3: 26}
    for depth, expected in expected_tree_counts.items():
        trees = enumerate_suffix_trees(depth)
        assert len(trees) == expected
        total = sum(tree_weight(tree, depth) for tree in trees)
        assert total == Fraction(1, 1)  # exact, in rational arithmetic
    for seed in range(20):
        rng = np.random.default_rng(2000 + seed)
        rounds, dim = 100, 2
        for depth in (0, 1, 2, 3):
            contexts = random_contexts(rng, depth, rounds)
            gradients = [ball_point(rng, dim) for _ in range(rounds)]
            engine = CtwOlo(depth=depth, dim=dim, initial_wealth=1.0)
            for t in range(rounds):
                engine.update(contexts[t], gradients[t])
            explicit = explicit_mixture_potential(gradients, contexts, depth)
            assert abs(engine.tree.log_ctw_potential - explicit) <= 1e-8
    assert time.perf_counter() - start < 30.0


# ---------------------------------------------------------------------------
# 7. Wealth dominates every single suffix tree's own product guarantee.
# ---------------------------------------------------------------------------


def test_criterion_07_per_tree_regret_domination():
    rng = np.random.default_rng(1007)
    rounds, dim = 300, 2
    for depth in (0, 1, 2, 3):
        contexts = random_contexts(rng, depth, rounds)
        gradients = [ball_point(rng, dim) for _ in range(rounds)]
        engine = CtwOlo(depth=depth, dim=dim, initial_wealth=1.0)
        for t in range(rounds):
            engine.update(contexts[t], gradients[t])
        log_wealth = math.log(engine.ledger.current_wealth)
        for tree in enumerate_suffix_trees(depth):
            competitor = best_tree_competitor(gradients, contexts, tree)
            log_tree_potential = sum(
                log_kt_potential(
                    competitor.leaf_counts[leaf],
                    float(np.linalg.norm(competitor.leaf_sums[leaf])),
                )
                for leaf in competitor.leaf_counts
            )
            log_weight = -tree_complexity(tree, depth) * math.log(2.0)
            assert log_wealth >= log_weight + 0.0 + log_tree_potential - 1e-8


# ---------------------------------------------------------------------------
# 8. Per-round work is exactly 2(D+1) node touches.
# ---------------------------------------------------------------------------


def test_criterion_08_linear_per_round_node_touches():
    rng = np.random.default_rng(1008)
    for depth in range(11):
        rounds = 50
        contexts = random_contexts(rng, depth, rounds)
        engine = CtwOlo(depth=depth, dim=2, initial_wealth=1.0)
        for t in range(rounds):
            engine.action(contexts[t])
            engine.update(contexts[t], ball_point(rng, 2))
            assert engine.tree.node_touches == 2 * (depth + 1) * (t + 1)


# ---------------------------------------------------------------------------
# 9. Alternating-sign stream: side information separates the engine from
#    every static competitor.
# ---------------------------------------------------------------------------


def test_criterion_09_alternating_stream_reproduction():
    rounds = 1000
    base = np.array([1.0, 0.0])
    # Signs -1, +1, -1, ... with the previous-round sign (pad +1) as the
    # side-information symbol: each symbol's subsequence is pure.
    gradients = [(-1.0 if t % 2 == 0 else 1.0) * base for t in range(rounds)]
    total = np.sum(gradients, axis=0)
    assert float(np.linalg.norm(total)) == 0.0  # best static reward, exact

    omega = []
    counts: dict = {}
    sums: dict = {}
    engine = ProductKtState(2, initial_wealth=1.0)
    reward = 0.0
    for t in range(1, rounds + 1):
        state = markov_context(omega, t, 1)
        g = gradients[t - 1]
        action = product_kt_action(engine, state)
        reward += float(np.dot(g, action))
        product_kt_update(engine, state, g)
        counts[state] = counts.get(state, 0) + 1
        sums[state] = sums.get(state, np.zeros(2)) + g
        omega.append(1 if g[0] >= 0 else -1)

    # Depth-1 adaptive competitor reward, exactly (T/2)(|u+| + |u-|)|g|.
    assert set(counts.values()) == {rounds // 2}
    for norm_plus, norm_minus in ((1.0, 1.0), (0.5, 2.0), (3.0, 0.0)):
        competitor_reward = norm_plus * float(
            np.linalg.norm(sums["1"])
        ) + norm_minus * float(np.linalg.norm(sums["0"]))
        expected = (rounds / 2.0) * (norm_plus + norm_minus) * 1.0
        assert competitor_reward == expected  # exact float equality

    best_unit_adaptive = float(rounds)  # (T/2)(1 + 1) * 1
    assert reward > 0.9 * best_unit_adaptive


# ---------------------------------------------------------------------------
# 10. Potential identities on an exhaustive small grid.
# ---------------------------------------------------------------------------


def test_criterion_10_potential_identities():
    for t in range(0, 61):
        for x in range(-t, t + 1):
            here = log_kt_potential(t, float(x))
            up = log_kt_potential(t + 1, x + 1.0)
            down = log_kt_potential(t + 1, x - 1.0)
            half_sum = float(np.logaddexp(up, down)) - math.log(2.0)
            assert abs(here - half_sum) <= 1e-10
            bet = kt_bet_fraction(t + 1, float(x))
            assert abs(bet - math.tanh((up - down) / 2.0)) <= 1e-10
            for g in np.linspace(-1.0, 1.0, 9):
                lhs = math.log1p(g * bet) + here
                rhs = log_kt_potential(t + 1, x + float(g))
                assert lhs >= rhs - 1e-10
                if abs(g) == 1.0:
                    assert abs(lhs - rhs) <= 1e-10


# ---------------------------------------------------------------------------
# 11. Lambert W: inverse identity and bracketing bounds.
# ---------------------------------------------------------------------------


def test_criterion_11_lambert_w_identity_and_bounds():
    for x in np.logspace(-6, 6, 241):
        w = lambert_w(float(x))
        assert abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, x)
        ln1p = math.log1p(x)
        assert 0.6321 * ln1p - 1e-12 <= w <= ln1p + 1e-12


# ---------------------------------------------------------------------------
# 12. Structured-stream regression: context trees beat the context-free
#     engine, and the multi-quantizer combiners track the best single axis.
# ---------------------------------------------------------------------------


def test_criterion_12_structured_stream_qualitative_reproduction():
    start = time.perf_counter()
    rounds = 5000
    wins = 0
    for seed in range(100):
        kt = run_experiment(
            ExperimentConfig(
                algorithm="kt", data="synthetic:markov2", rounds=rounds, seed=seed
            )
        )
        ctw = run_experiment(
            ExperimentConfig(
                algorithm="ctw",
                data="synthetic:markov2",
                rounds=rounds,
                seed=seed,
                depth=3,
            )
        )
        wins += ctw.final_loss < kt.final_loss
    assert wins >= 95

    for seed in range(6):
        singles = [
            run_experiment(
                ExperimentConfig(
                    algorithm="ctw",
                    data="synthetic:markov2",
                    rounds=rounds,
                    seed=seed,
                    depth=3,
                    quantizer_axes=(axis,),
                )
            ).final_loss
            for axis in (0, 1, 2)
        ]
        best = min(singles)
        for algorithm in ("ctw_mixture", "ctw_addition"):
            combined = run_experiment(
                ExperimentConfig(
                    algorithm=algorithm,
                    data="synthetic:markov2",
                    rounds=rounds,
                    seed=seed,
                    depth=3,
                    quantizer_axes=(0, 1, 2),
                )
            )
            assert combined.final_loss <= 1.05 * best
    assert time.perf_counter() - start < 120.0
