import math
from random import Random
from types import SimpleNamespace

import numpy as np
import pytest

from hamtest.adaptive import (
    AdaptiveConfig,
    BlockDescriptor,
    adaptive_test,
    calibrate_container_constant,
    estimate_potential,
    extract_fragments,
    find_good_block,
    multi_instance_filter,
    sample_candidate,
    _filter_with_work,
)
from hamtest.instances import gen_bernoulli_family
from hamtest.strings import Instance, QueryOracle, occ_exact, occ_hamming


def hash_branch_cfg(n, m, k, k0=2, delta=0.08, epsilon=0.05):
    """Duck-typed config forcing the zipped-fingerprint filter branch."""
    return SimpleNamespace(
        n=n, m=m, k=k, alignments=n - m + 1, epsilon=epsilon, delta=delta,
        k0=k0, d_iters=10, l_samples=50, profile="desk", use_brute_filter=False,
    )


def make_instance(rng, n, m, k, sigma=3, planted=None):
    text = [rng.randrange(sigma) for _ in range(n)]
    if planted is not None:
        pattern = text[planted : planted + m]
    else:
        pattern = [rng.randrange(sigma) for _ in range(m)]
    return Instance(pattern=pattern, text=text, sigma=sigma, k=k)


def pairs_from_blocks(inst, starts):
    out = []
    for a in starts:
        blk = BlockDescriptor("P", a // inst.delta, a, a + inst.delta, True)
        out.append(extract_fragments(blk, inst))
    return out


class TestConfig:
    def test_desk_caps_and_k0(self):
        inst = make_instance(Random(0), 1100, 1000, 64, sigma=2)
        cfg = AdaptiveConfig.derive(inst, c_container=1.0)
        assert cfg.epsilon == pytest.approx(1 / (20 * math.log2(1000)))
        assert cfg.delta == pytest.approx(cfg.epsilon / 16)
        assert cfg.d_iters == 60 and cfg.l_samples == 400
        expect_k0 = max(0, math.ceil(64 * 101 / (64 * 1100) * cfg.epsilon) - 1)
        assert cfg.k0 == expect_k0 == 0
        assert cfg.use_brute_filter

    def test_paper_profile_uncapped(self):
        inst = make_instance(Random(1), 1100, 1000, 64, sigma=2)
        cfg = AdaptiveConfig.derive(inst, profile="paper", c_container=1.0)
        assert cfg.d_iters > 60 and cfg.l_samples > 400
        assert cfg.epsilon == pytest.approx(1 / (20 * math.log2(1000) ** 4))

    def test_calibrated_constant_at_least_one(self):
        assert calibrate_container_constant() >= 1.0


class TestMultiInstanceFilter:
    def test_empty_pair_list_full_range(self):
        inst = make_instance(Random(2), 700, 637, 48)
        cfg = AdaptiveConfig.derive(inst)
        aset = multi_instance_filter([], cfg, Random(0), sigma=inst.sigma)
        assert aset.to_list() == list(range(inst.delta))

    def test_brute_branch_equals_intersection_oracle(self):
        rng = Random(3)
        inst = make_instance(rng, 700, 637, 48)
        cfg = AdaptiveConfig.derive(inst)
        assert cfg.use_brute_filter
        pairs = pairs_from_blocks(inst, (0, 64, 256))
        aset = multi_instance_filter(pairs, cfg, Random(1), sigma=inst.sigma)
        expect = set(range(inst.delta))
        for pr in pairs:
            # independent oracle: threshold-zero window scan, not the matcher
            expect &= set(occ_hamming(pr.p_frag, pr.t_frag, 0))
        assert set(aset.to_list()) == expect

    def test_exact_common_occurrence_always_kept_hash_branch(self):
        rng = Random(4)
        t = 20
        inst = make_instance(rng, 700, 637, 48, planted=t)
        cfg = hash_branch_cfg(700, 637, 48)
        pairs = pairs_from_blocks(inst, (0, 128, 320))
        for trial in range(25):
            aset = _filter_with_work(pairs, cfg, Random(trial), sigma=3)[0]
            assert t in set(aset.to_list())

    def test_hash_branch_stays_within_occ_k0(self):
        rng = Random(5)
        inst = make_instance(rng, 700, 637, 48)
        cfg = hash_branch_cfg(700, 637, 48, k0=2, delta=0.08)
        pairs = pairs_from_blocks(inst, (0, 128, 320))
        inter = set(range(inst.delta))
        for pr in pairs:
            inter &= set(occ_hamming(pr.p_frag, pr.t_frag, cfg.k0))
        escapes = 0
        trials = 60
        for trial in range(trials):
            aset = _filter_with_work(pairs, cfg, Random(100 + trial), sigma=3)[0]
            if not set(aset.to_list()) <= inter:
                escapes += 1
        assert escapes / trials <= 2 * cfg.delta, escapes

    def test_same_randomness_coupling_hash_branch(self):
        rng = Random(6)
        inst = make_instance(rng, 700, 637, 48)
        cfg = hash_branch_cfg(700, 637, 48)
        pairs = pairs_from_blocks(inst, (0, 64, 256))
        contained = 0
        trials = 300
        for trial in range(trials):
            prev = _filter_with_work(pairs[:2], cfg, Random(trial), sigma=3)[0]
            new = _filter_with_work(pairs[:3], cfg, Random(trial), sigma=3)[0]
            if set(new.to_list()) <= set(prev.to_list()):
                contained += 1
        assert contained / trials >= 1 - 2 * cfg.delta / inst.delta, contained


class TestSampleCandidate:
    def test_uniform_over_full_range_when_no_pairs(self):
        inst = make_instance(Random(7), 700, 661, 32)  # delta = 40
        cfg = AdaptiveConfig.derive(inst)
        rng = Random(8)
        delta = inst.delta
        counts = np.zeros(delta)
        trials = 10_000
        for _ in range(trials):
            draw = sample_candidate([], cfg, rng, sigma=inst.sigma)
            assert not draw.breached
            counts[draw.value] += 1
        freq = counts / trials
        sd = math.sqrt((1 / delta) * (1 - 1 / delta) / trials)
        assert np.all(np.abs(freq - 1 / delta) <= 5 * sd), freq

    def test_bottom_on_forced_empty_intersection(self):
        # two disjoint exact-match structures: fragments with no common hit
        inst = Instance(
            pattern=[0, 1] * 50, text=([0, 1] * 50) + [1] * 19, sigma=2, k=8
        )
        cfg = AdaptiveConfig.derive(inst)
        pairs = pairs_from_blocks(inst, (0,))
        # doctor the second fragment so intersection dies: shift by one
        pr = pairs[0]
        bad = type(pr)(p_frag=pr.p_frag, t_frag=np.roll(pr.t_frag, 1), origin=pr.origin)
        common = set(occ_hamming(pr.p_frag, pr.t_frag, 0)) & set(
            occ_hamming(bad.p_frag, bad.t_frag, 0)
        )
        if common:
            pytest.skip("construction accidentally kept a common occurrence")
        draw = sample_candidate([pr, bad], cfg, Random(9), sigma=2)
        assert draw.value is None

    def test_budget_breach_flagged_with_zero_position(self):
        inst = make_instance(Random(23), 700, 637, 48)
        cfg = AdaptiveConfig.derive(inst)
        pairs = pairs_from_blocks(inst, (0,))
        draw = sample_candidate(pairs, cfg, Random(0), sigma=inst.sigma, work_budget=1e-6)
        assert draw.breached and draw.value == 0

    def test_planted_and_k0_regime_lands_in_occ_k0(self):
        rng = Random(10)
        t = 11
        inst = make_instance(rng, 700, 637, 48, planted=t)
        cfg = hash_branch_cfg(700, 637, 48, k0=2, delta=0.08)
        pairs = pairs_from_blocks(inst, (64,))
        allowed = set(occ_hamming(pairs[0].p_frag, pairs[0].t_frag, cfg.k0))
        hits = 0
        trials = 150
        for trial in range(trials):
            draw = sample_candidate(pairs, cfg, Random(200 + trial), sigma=3)
            if draw.value is not None and draw.value in allowed:
                hits += 1
        assert hits / trials >= 1 - 2 * cfg.delta, hits


class TestFindGoodBlock:
    def brute_good_blocks(self, inst, samples, cfg, factor):
        """Blocks holding >= k*Delta/(64n) positions at >= factor*epsilon
        empirical frequency (Def-style oracle on the sample distribution)."""
        n, m, delta = inst.n, inst.m, inst.delta
        total = len(samples)
        freq_t = np.zeros(n)
        freq_p = np.zeros(m)
        for x in samples:
            diff = np.nonzero(inst.pattern != inst.text[x : x + m])[0]
            freq_p[diff] += 1
            freq_t[diff + x] += 1
        need = factor * cfg.epsilon * total
        good = set()
        for b in range(math.ceil(n / delta)):
            cnt = np.count_nonzero(freq_t[b * delta : (b + 1) * delta] >= need)
            if cnt >= inst.k * delta / (64 * n):
                good.add(("T", b))
        for b in range(math.ceil(m / delta)):
            cnt = np.count_nonzero(freq_p[b * delta : (b + 1) * delta] >= need)
            if cnt >= inst.k * delta / (64 * n):
                good.add(("P", b))
        return good

    def test_dense_mismatch_block_found(self):
        # all mismatches live in one pattern block: T constant, P has a
        # block of ones
        n, m, k = 800, 720, 64
        delta = n - m + 1
        pattern = [0] * m
        blk = 3
        for j in range(blk * delta, (blk + 1) * delta):
            pattern[j] = 1
        inst = Instance(pattern=pattern, text=[0] * n, sigma=2, k=k)
        cfg = AdaptiveConfig.derive(inst)
        hits = 0
        trials = 100
        for trial in range(trials):
            rng = Random(trial)
            samples = [rng.randrange(delta) for _ in range(cfg.l_samples)]
            good = self.brute_good_blocks(inst, samples, cfg, factor=2.0)
            block = find_good_block(samples, QueryOracle(inst), cfg, rng)
            if block.verified and (block.which, block.index) in good:
                hits += 1
        assert hits / trials >= 0.6, hits

    def test_everything_admissible_never_exhausts(self):
        # disjoint alphabets: every position mismatches every alignment
        inst = Instance(pattern=[2] * 90, text=[1] * 100, sigma=3, k=8)
        cfg = AdaptiveConfig.derive(inst)
        rng = Random(11)
        samples = [rng.randrange(inst.delta) for _ in range(cfg.l_samples)]
        block = find_good_block(samples, QueryOracle(inst), cfg, rng)
        assert block.verified

    def test_exact_match_instance_exhausts_flagged(self):
        inst = Instance(pattern=[0] * 90, text=[0] * 100, sigma=2, k=8)
        cfg = AdaptiveConfig.derive(inst)
        rng = Random(12)
        samples = [rng.randrange(inst.delta) for _ in range(cfg.l_samples)]
        block = find_good_block(samples, QueryOracle(inst), cfg, rng)
        assert not block.verified


class TestExtractFragments:
    def test_left_edge_clamp(self):
        inst = make_instance(Random(13), 660, 600, 16)
        blk = BlockDescriptor("P", 0, 0, inst.delta, True)
        pair = extract_fragments(blk, inst)
        assert pair.origin[3] == 0
        assert len(pair.p_frag) == 2 * inst.delta
        assert len(pair.t_frag) == 3 * inst.delta - 1

    def test_right_edge_clamp(self):
        inst = make_instance(Random(14), 660, 600, 16)
        blk = BlockDescriptor("P", 9, inst.m - 5, inst.m, True)
        pair = extract_fragments(blk, inst)
        assert pair.origin[3] == inst.m - 2 * inst.delta

    def test_occurrences_survive_zoom(self):
        rng = Random(15)
        t = 33
        inst = make_instance(rng, 660, 600, 16, planted=t)
        for a in (0, 100, 300, 599):
            pair = extract_fragments(BlockDescriptor("P", 0, a, a + 1, True), inst)
            assert set(occ_exact(inst.pattern, inst.text)) <= set(
                occ_exact(pair.p_frag, pair.t_frag)
            )

    def test_regime_violation_raises(self):
        inst = make_instance(Random(16), 100, 60, 8)  # delta = 41 > 0.2m
        with pytest.raises(ValueError):
            extract_fragments(BlockDescriptor("P", 0, 0, 41, True), inst)


class TestAdaptiveTest:
    def test_planted_always_yes(self):
        for seed in range(6):
            li = gen_bernoulli_family("planted", 110, 100, 12, seed=seed, verify=False)
            rep = adaptive_test(li.instance, rng=Random(seed))
            assert rep.answer == "yes"

    def test_text_equals_pattern_yes(self):
        inst = Instance(pattern=[0, 1] * 40, text=[0, 1] * 40, sigma=2, k=4)
        rep = adaptive_test(inst, rng=Random(17))
        assert rep.answer == "yes"

    def test_kfar_instances_mostly_no(self):
        no = 0
        for seed in range(20):
            li = gen_bernoulli_family("random", 1100, 1000, 64, seed=7000 + seed)
            if not li.truth_kfar:
                continue
            rep = adaptive_test(li.instance, rng=Random(seed))
            no += rep.answer == "no"
        assert no >= 18

    def test_large_delta_delegates(self):
        li = gen_bernoulli_family("planted", 400, 100, 12, seed=1, verify=False)
        rep = adaptive_test(li.instance, rng=Random(18))
        assert rep.extra.get("delegated")
        assert rep.answer == "yes"

    def test_small_n_falls_back_to_exact(self):
        inst = Instance(pattern=[0, 1, 1], text=[1, 0, 1, 1, 0], sigma=2, k=1)
        rep = adaptive_test(inst, rng=Random(19))
        assert rep.answer == "yes"
        assert any("n < 64" in d for d in rep.deviations)

    def test_trace_rows_emitted(self):
        li = gen_bernoulli_family("planted", 110, 100, 12, seed=3, verify=False)
        rep = adaptive_test(li.instance, rng=Random(20), trace=True)
        rows = rep.extra["trace"]
        assert rows and all(r["iter"] == i + 1 for i, r in enumerate(rows))
        assert {"block_string", "block_index", "a0", "k0", "bot_seen"} <= rows[0].keys()


class TestGoodPositionCount:
    def test_kfar_instance_has_quarter_k_good_positions(self):
        # under the uniform candidate distribution, a k-far instance must
        # expose at least k/4 positions eliminating >= 4*epsilon of the mass
        for seed in (0, 1, 2):
            li = gen_bernoulli_family("random", 700, 637, 48, seed=600 + seed)
            if not li.truth_kfar:
                continue
            inst = li.instance
            cfg = AdaptiveConfig.derive(inst)
            n, m, delta = inst.n, inst.m, inst.delta
            freq_t = np.zeros(n)
            freq_p = np.zeros(m)
            for x in range(delta):  # exact frequencies over the uniform law
                diff = np.nonzero(inst.pattern != inst.text[x : x + m])[0]
                freq_p[diff] += 1
                freq_t[diff + x] += 1
            need = 4 * cfg.epsilon * delta
            good = np.count_nonzero(freq_p >= need) + np.count_nonzero(freq_t >= need)
            assert good >= inst.k / 4


class TestPotential:
    def test_no_pairs_exact_value(self):
        inst = make_instance(Random(21), 700, 637, 48)
        cfg = AdaptiveConfig.derive(inst)
        mean, radius = estimate_potential([], cfg, Random(0), trials=4)
        assert mean == pytest.approx(math.log(1 + inst.delta))
        assert radius == 0.0

    def test_forced_empty_zero(self):
        inst = make_instance(Random(22), 700, 637, 48)
        cfg = AdaptiveConfig.derive(inst)
        pairs = pairs_from_blocks(inst, (0,))
        pr = pairs[0]
        bad = type(pr)(p_frag=pr.p_frag, t_frag=np.roll(pr.t_frag, 1), origin=pr.origin)
        if set(occ_hamming(pr.p_frag, pr.t_frag, 0)) & set(occ_hamming(bad.p_frag, bad.t_frag, 0)):
            pytest.skip("accidental common occurrence")
        mean, _ = estimate_potential([pr, bad], cfg, Random(1), trials=4)
        assert mean == 0.0

    def test_no_instance_traces_drop_fast(self):
        # potential must drop by >= eps/8 in at least half the observed steps
        drops = total = 0
        for seed in range(50):
            li = gen_bernoulli_family("random", 700, 637, 48, seed=900 + seed, verify=False)
            inst = li.instance
            cfg = AdaptiveConfig.derive(inst)
            rng = Random(seed)
            pairs = []
            prev = math.log(1 + inst.delta)
            for d in range(1, 4):
                aset = multi_instance_filter(pairs, cfg, rng, sigma=inst.sigma)
                if len(aset) == 0:
                    break
                x = aset.sample_uniform(rng)
                samples = [x] * cfg.l_samples
                block = find_good_block(samples, QueryOracle(inst), cfg, rng)
                pairs.append(extract_fragments(block, inst))
                cur, _ = estimate_potential(pairs, cfg, rng, trials=3, sigma=inst.sigma)
                total += 1
                drops += (prev - cur) >= cfg.epsilon / 8
                prev = cur
        assert total > 0
        assert drops / total >= 0.5, (drops, total)
