import math

import pytest

from cli import (
    DEFAULTS,
    ConfigError,
    build_parser,
    load_document,
    load_run_config,
    main,
    merge_documents,
    parse_param,
)


def _write_config(tmp_path, text: str):
    path = tmp_path / "run.toml"
    path.write_text(text)
    return str(path)


def _run(tmp_path, *argv: str, config: str | None = None) -> int:
    args = [argv[0], "--out", str(tmp_path / "out"), *argv[1:]]
    if config is not None:
        args += ["--config", _write_config(tmp_path, config)]
    return main(args)


SMALL = "[criteria]\nhorizon = 4096\n"
MEDIUM = "[criteria]\nhorizon = 65536\n"


class TestCheck:
    def test_unperturbed_holds(self, tmp_path):
        assert _run(tmp_path, "check", config=SMALL) == 0
        out = tmp_path / "out"
        for name in ("g_values.csv", "sigma.csv", "schur.csv", "rate_fits.csv", "verdicts.txt", "summary.txt"):
            assert (out / name).exists()
        assert (out / "verdicts.txt").read_text().splitlines()[-1] == "overall = holds"

    def test_counterexample_fails_with_witness(self, tmp_path):
        code = _run(tmp_path, "check", "--scenario", "counterexample", "--param", "m_max=10", config=SMALL)
        assert code == 1
        text = (tmp_path / "out" / "verdicts.txt").read_text()
        assert "g_decays = fails [required]" in text
        witnesses = [line for line in text.splitlines() if line.startswith("  witness n = ")]
        assert len(witnesses) >= 4
        n = int(witnesses[0].split("=")[1].split(":")[0])
        assert math.isqrt((n + 1) // 2) ** 2 == (n + 1) // 2

    def test_lnln_inconclusive_with_note(self, tmp_path):
        assert _run(tmp_path, "check", "--scenario", "lnln-decay", config=SMALL) == 2
        lines = (tmp_path / "out" / "verdicts.txt").read_text().splitlines()
        assert "g_decays = inconclusive [required]" in lines
        i = lines.index("g_decays = inconclusive [required]")
        assert lines[i + 2].startswith("  note: G(n) -> 0 is implied for monotone")
        assert lines[-1] == "overall = inconclusive"

    def test_geometric_spectrum_runs(self, tmp_path):
        config = SMALL + "[spectrum]\nkind = \"geometric\"\nparams = { c = 1.0, q = 2.0 }\n[weights]\nkind = \"power\"\n"
        assert _run(tmp_path, "check", config=config) in (0, 1, 2)
        assert "summable = holds" in (tmp_path / "out" / "verdicts.txt").read_text()

    def test_log_power_harmonic_growth_blocks_fast_route(self, tmp_path):
        assert _run(tmp_path, "check", "--scenario", "log-power-fast", "--param", "a=1", config=MEDIUM) == 2
        code = _run(tmp_path, "check", "--scenario", "log-power-fast", "--param", "a=1", "--fast-route", config=MEDIUM)
        assert code == 1
        text = (tmp_path / "out" / "verdicts.txt").read_text()
        assert "g_tilde_bounded = fails [required]" in text
        assert (tmp_path / "out" / "g_tilde_growth.csv").exists()

    def test_log_power_fast_route_holds(self, tmp_path):
        code = _run(tmp_path, "check", "--scenario", "log-power-fast", "--param", "a=2", "--fast-route", config=MEDIUM)
        assert code == 0

    def test_outputs_are_deterministic(self, tmp_path):
        for name in ("a", "b"):
            assert main(["check", "--out", str(tmp_path / name), "--config", _write_config(tmp_path, SMALL)]) == 0
        for name in ("g_values.csv", "sigma.csv", "schur.csv", "g_tilde.csv", "verdicts.txt"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_config_is_echoed(self, tmp_path):
        _run(tmp_path, "check", "--seed", "7", config=SMALL)
        echoed = load_document(tmp_path / "out" / "config.toml")
        assert echoed["seed"] == 7
        assert echoed["criteria"]["horizon"] == 4096


class TestSpectral:
    def test_unperturbed_truncation_passes(self, tmp_path):
        config = "[spectral]\nsize = 50\ndraws = 3\n"
        assert _run(tmp_path, "spectral", config=config) == 0
        out = tmp_path / "out"
        summary = (out / "summary.txt").read_text().splitlines()
        assert "passed = true" in summary
        assert "box_rank = 2" in summary
        eigen_lines = (out / "eigenvalues.csv").read_text().splitlines()
        assert eigen_lines[0] == "index,re,im,region"
        assert len(eigen_lines) == 51
        assert (out / "perturbation.txt").read_text().startswith("# rieszlab perturbation matrix")

    def test_random_perturbation_is_reproducible(self, tmp_path):
        config = '[weights]\nkind = "power"\n[perturbation]\nsource = "random"\n[spectral]\nsize = 40\ndraws = 2\n'
        path = _write_config(tmp_path, config)
        for name in ("a", "b"):
            main(["spectral", "--out", str(tmp_path / name), "--config", path])
        for name in ("perturbation.txt", "eigenvalues.csv", "projections.csv", "riesz_sums.csv", "summary.txt"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestSweep:
    def test_small_sweep(self, tmp_path):
        config = (
            '[weights]\nkind = "power"\n'
            '[sweep]\nparameter = "weights.params.alpha"\nvalues = [0.5, 1.0]\n'
            'log2_min = 2\nlog2_max = 10\nmodel = "power"\n'
        )
        assert _run(tmp_path, "sweep", "--no-cache", config=config) == 0
        rows = (tmp_path / "out" / "sweep.csv").read_text().splitlines()
        assert rows[0] == "param,n_or_k,value,tail,tail_lower"
        assert len(rows) == 1 + 2 * 9
        assert rows[1].startswith("0.5,4,")
        fits = (tmp_path / "out" / "rate_fits.csv").read_text().splitlines()
        assert fits[0] == "param,model,beta,intercept,residual"
        assert len(fits) == 3

    def test_two_parameter_grid(self, tmp_path):
        config = (
            '[spectrum]\nkind = "affine"\nparams = { c = 1.0, d = 0.0 }\n'
            '[weights]\nkind = "power"\n'
            '[sweep]\nquantity = "sigma"\nparameter = "weights.params.alpha"\nvalues = [1.0]\n'
            'parameter2 = "spectrum.params.c"\nvalues2 = [1.0, 2.0]\nlog2_min = 2\nlog2_max = 4\n'
        )
        assert _run(tmp_path, "sweep", "--no-cache", config=config) == 0
        rows = (tmp_path / "out" / "sweep.csv").read_text().splitlines()
        assert rows[0] == "param,param2,n_or_k,value,tail,tail_lower"
        assert len(rows) == 1 + 2 * 3

    def test_empty_grid(self, tmp_path):
        config = '[sweep]\nparameter = "weights.params.alpha"\nvalues = []\n'
        assert _run(tmp_path, "sweep", config=config) == 64

    def test_bad_parameter_path(self, tmp_path):
        config = '[sweep]\nparameter = "criteria.epsilon"\nvalues = [0.1]\n'
        assert _run(tmp_path, "sweep", "--no-cache", config=config) == 64

    def test_unknown_quantity(self, tmp_path):
        config = '[sweep]\nquantity = "tau"\nparameter = "weights.params.alpha"\nvalues = [1.0]\n'
        assert _run(tmp_path, "sweep", config=config) == 64


class TestConfiguration:
    def test_unknown_key(self, tmp_path):
        assert _run(tmp_path, "check", config="[criteria]\nhorizont = 10\n") == 64

    def test_malformed_toml(self, tmp_path):
        assert _run(tmp_path, "check", config="[criteria\n") == 64

    def test_bad_arguments(self):
        assert main(["check", "--bogus"]) == 64
        assert main([]) == 64

    def test_param_needs_scenario(self, tmp_path):
        assert _run(tmp_path, "check", "--param", "a=1") == 64

    def test_unknown_scenario(self, tmp_path):
        assert _run(tmp_path, "check", "--scenario", "nope") == 64

    def test_scenario_list(self, capsys):
        assert main(["scenario-list"]) == 0
        out = capsys.readouterr().out
        assert "counterexample: " in out
        assert "  m_max = 10" in out

    def test_parse_param(self):
        assert parse_param("m_max=10") == ("m_max", 10)
        assert parse_param("a = 1.5") == ("a", 1.5)
        assert parse_param("values=[0.5, 0.25]") == ("values", [0.5, 0.25])
        assert parse_param("name=plain") == ("name", "plain")
        with pytest.raises(ConfigError):
            parse_param("m_max")

    def test_params_tables_are_replaced(self):
        base = merge_documents(DEFAULTS, {"weights": {"kind": "power", "params": {"alpha": 1.0}}})
        merged = merge_documents(base, {"weights": {"params": {"scale": 2.0}}})
        assert merged["weights"] == {"kind": "power", "params": {"scale": 2.0}}

    def test_flags_override_file(self, tmp_path):
        path = _write_config(tmp_path, 'seed = 3\n[scenario]\nname = "counterexample"\nparams = { m_max = 4 }\n')
        args = build_parser().parse_args(["check", "--config", path, "--seed", "9", "--param", "m_max=5"])
        config = load_run_config(args)
        assert config.seed == 9
        assert config.document["scenario"]["params"] == {"m_max": 5}
        assert config.label == "counterexample"
        assert config.output_dir.name == "check-counterexample"
