import json

import numpy as np
import pytest

import kpilab as kl
from kpilab.errors import ConfigError, NumericalConsistencyError, ParameterError
from kpilab.experiments import (
    check_leakage,
    leakage_fraction,
    parse_config,
    random_field,
    run_experiment,
    seeded_rng,
)


class TestRandomFields:
    def test_unit_norm_mean_zero_nyquist_free(self, rng):
        g = kl.TorusGrid(64, 16)
        u = random_field(g, rng)
        assert abs(u.norm() - 1.0) < 1e-13
        assert np.max(np.abs(u.coeffs[g.index_of_k(0)])) == 0.0
        assert np.max(np.abs(u.coeffs[0])) == 0.0
        assert np.max(np.abs(u.coeffs[:, 0])) == 0.0

    def test_seed_stability(self):
        a = random_field(kl.TorusGrid(32), seeded_rng(5, "x"))
        b = random_field(kl.TorusGrid(32), seeded_rng(5, "x"))
        c = random_field(kl.TorusGrid(32), seeded_rng(5, "y"))
        assert np.array_equal(a.coeffs, b.coeffs)
        assert not np.array_equal(a.coeffs, c.coeffs)

    def test_leakage_guard(self, rng):
        g = kl.TorusGrid(64)
        inner = random_field(g, rng, kmax=10)
        assert leakage_fraction(inner) == 0.0
        check_leakage(inner)
        outer = kl.mode_field(g, 30)
        with pytest.raises(NumericalConsistencyError):
            check_leakage(outer)


class TestScans:
    def test_frequency_scan_rows(self, profile_default):
        rows = kl.frequency_localized_scan(
            h=1.0 / 64.0,
            n_values=range(-1, 2),
            epsilon0=0.5,
            horizon=1.0,
            profile=profile_default,
            trials=4,
            rng=seeded_rng(3, "scan"),
        )
        assert [r["n"] for r in rows] == [-1, 0, 1]
        for r in rows:
            assert r["modes"] > 0
            assert np.isfinite(r["empirical_constant"])
            assert r["empirical_constant"] > 0

    def test_regime_constraint(self, profile_default):
        with pytest.raises(ParameterError):
            kl.frequency_localized_scan(
                h=0.25,
                n_values=[3],
                epsilon0=0.5,
                horizon=1.0,
                profile=profile_default,
            )

    def test_weak_observability_rows(self):
        profile = kl.make_control_profile(
            np.pi / 4, 3 * np.pi / 4, "smooth-exp", kl.TorusGrid(128)
        )
        rows = kl.weak_observability_diagnostic(
            h=1.0 / 16.0,
            horizon=1.0,
            trials=6,
            profile=profile,
            rng=seeded_rng(4, "weak"),
        )
        assert len(rows) == 6
        for r in rows:
            assert r["constant"] > 0
            assert r["constant"] * (r["observed_energy"] + r["weak_remainder"]) == pytest.approx(
                r["mass"]
            )

    def test_weak_bound_single_low_mode(self):
        # for a single low mode the negative-order remainder alone already
        # closes the two-term bound with constant one
        g = kl.TorusGrid(128)
        u_low = kl.mode_field(g, 1)
        remainder = kl.sobolev_norm(u_low, -1.0) ** 2
        assert u_low.norm() ** 2 / remainder <= 1.0 + 1e-12

    def test_weak_bound_high_modes_reduce_to_plain_observability(self):
        # data far up the spectrum make the remainder negligible against the
        # observed energy, so the constant is essentially mass over energy
        profile = kl.make_control_profile(
            np.pi / 4, 3 * np.pi / 4, "smooth-exp", kl.TorusGrid(256)
        )
        rows = kl.weak_observability_diagnostic(
            h=1.0 / 16.0,
            horizon=1.0,
            trials=1,
            profile=profile,
            rng=seeded_rng(6, "weak-high"),
            alpha=2.0,
            kmax=100,
        )
        row = rows[0]
        # measured 0.13 for the high window vs 3.9 for a kmax=3 window
        assert row["weak_remainder"] <= 0.2 * row["observed_energy"]


CONFIG_OK = """
# run settings
[run]
seed = 77

[dichotomy-weak]
type = dichotomy
alpha = 0.5
n_min = 4
n_max = 6
horizon = 1.0

[scan-random]
type = weak-observability
h = 0.0625
trials = 3
profile_nx = 128
"""


class TestConfig:
    def test_parse_ok(self):
        sections = parse_config(CONFIG_OK)
        assert set(sections) == {"run", "dichotomy-weak", "scan-random"}
        assert sections["run"]["seed"].value == "77"
        assert sections["scan-random"]["h"].line == 15

    def test_key_outside_section(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("seed = 1\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("[a]\nnonsense\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="line 3"):
            parse_config("[a]\nx = 1\nx = 2\n")

    def test_unknown_type(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("[bad]\ntype = nonsense\n")
        with pytest.raises(ConfigError, match="line 2"):
            run_experiment(cfg, output_root=tmp_path / "out")

    def test_bad_value_is_line_precise(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("[d]\ntype = dichotomy\nalpha = fish\n")
        with pytest.raises(ConfigError, match="line 3"):
            run_experiment(cfg, output_root=tmp_path / "out")


class TestRunExperiment:
    def test_empty_config_gives_manifest_only(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("[run]\nseed = 1\n")
        out = tmp_path / "out"
        manifest = run_experiment(cfg, output_root=out)
        assert (out / "manifest.json").exists()
        files = {e["file"] for e in manifest["outputs"]}
        assert files == {"summary.json"}

    def test_dichotomy_rows_and_shape(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(CONFIG_OK)
        out = tmp_path / "out"
        run_experiment(cfg, output_root=out)
        lines = (out / "dichotomy-weak.csv").read_text().strip().splitlines()
        assert lines[0] == "n,h,eps,ratio,grid_nx"
        assert len(lines) == 1 + 3
        summary = json.loads((out / "summary.json").read_text())
        assert summary["dichotomy-weak"]["monotone_decreasing"] is True

    def test_manifest_lists_all_outputs_with_hashes(self, tmp_path):
        import hashlib

        cfg = tmp_path / "c.cfg"
        cfg.write_text(CONFIG_OK)
        out = tmp_path / "out"
        manifest = run_experiment(cfg, output_root=out)
        listed = {e["file"] for e in manifest["outputs"]}
        produced = {p.name for p in out.iterdir()} - {"manifest.json"}
        assert listed == produced
        for entry in manifest["outputs"]:
            digest = hashlib.sha256((out / entry["file"]).read_bytes()).hexdigest()
            assert digest == entry["sha256"]

    def test_rerun_byte_identical(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(CONFIG_OK)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        run_experiment(cfg, output_root=out1)
        run_experiment(cfg, output_root=out2)
        for name in ("dichotomy-weak.csv", "scan-random.csv", "summary.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_seed_override_changes_random_outputs(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(CONFIG_OK)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        run_experiment(cfg, output_root=out1)
        run_experiment(cfg, output_root=out2, seed_override=1234)
        assert (out1 / "scan-random.csv").read_bytes() != (out2 / "scan-random.csv").read_bytes()
        # the dichotomy is deterministic and seed-independent
        assert (out1 / "dichotomy-weak.csv").read_bytes() == (out2 / "dichotomy-weak.csv").read_bytes()

    def test_threads_do_not_change_results(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(
            "[run]\nseed = 5\n\n[floor]\ntype = gramian-floor\nk_window = 8\nl_window = 2\nprofile_nx = 256\n"
        )
        out1, out2 = tmp_path / "a", tmp_path / "b"
        run_experiment(cfg, output_root=out1, threads=1)
        run_experiment(cfg, output_root=out2, threads=4)
        assert (out1 / "floor.csv").read_bytes() == (out2 / "floor.csv").read_bytes()


class TestScanGoldens:
    def test_near_critical_block_has_largest_exact_constant(self, profile_default):
        # the slow modes near the group-velocity zero live in the n = 0
        # block (and the ramp of n = 1); first verified run: 7.3811 there
        # against 7.3100 far away
        rows = kl.frequency_localized_scan(
            h=1.0 / 64.0,
            n_values=range(-2, 3),
            epsilon0=0.5,
            horizon=1.0,
            profile=profile_default,
            trials=4,
            rng=seeded_rng(42, "near-critical"),
        )
        by_n = {r["n"]: r for r in rows}
        near = by_n[0]["exact_constant"]
        far = by_n[-2]["exact_constant"]
        assert np.isfinite(near) and near > 0
        assert near >= 1.005 * far
        for r in rows:
            assert r["empirical_constant"] <= r["exact_constant"] * (1 + 1e-9)

    def test_single_mode_datum_inside_block(self, profile_default):
        # one mode: the ratio is finite, positive, and below the block worst
        from kpilab.dispersion import frequencies_1d
        from kpilab.fourier import TWO_PI
        from kpilab.observe import gramian_from_frequencies

        h = 1.0 / 64.0
        params = kl.DispersionParams.reduced(2.0, 1.0 / h**2)
        idx = np.array([48])  # h*k = 0.75, inside the n = 0 block
        omega = frequencies_1d(idx, params).astype(float)
        block = gramian_from_frequencies(1.0, idx, omega, profile_default, plain_weight=True)
        c = np.array([1.0 + 0.0j])
        ratio = (TWO_PI * np.sum(np.abs(c) ** 2)) / (TWO_PI * block.quadratic_form(c))
        assert 0 < ratio < np.inf

    def test_weak_observability_bounded_across_h(self):
        # first verified run: max constants 7.09, 7.07, 7.08
        profile = kl.make_control_profile(
            np.pi / 4, 3 * np.pi / 4, "smooth-exp", kl.TorusGrid(1024)
        )
        for h in (1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0):
            rows = kl.weak_observability_diagnostic(
                h, 1.0, 8, profile, rng=seeded_rng(9, f"weak-{h}")
            )
            assert max(r["constant"] for r in rows) <= 8.0


class TestScanGuards:
    def test_weak_diagnostic_h_window(self, profile_default):
        with pytest.raises(ParameterError):
            kl.weak_observability_diagnostic(1.5, 1.0, 1, profile_default)

    def test_frequency_scan_rejects_bad_h(self, profile_default):
        with pytest.raises(ParameterError):
            kl.frequency_localized_scan(-0.1, [0], 0.5, 1.0, profile_default)
