"""Scenario front end: exit codes, determinism, atomicity, compare."""

import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from plasmakin.cli import main
from plasmakin.config import (
    RunManifest,
    compare_manifests,
    load_scenario,
    read_manifest,
    write_manifest,
)
from plasmakin.errors import CompareError, ConfigError


def write_cfg(path, text):
    Path(path).write_text(text)
    return str(path)


@pytest.fixture()
def runner():
    return CliRunner()


class TestConfig:
    def test_parse_and_extends(self, tmp_path):
        base = write_cfg(tmp_path / "base.cfg", "scenario = cloud\nsigma = 1.0\n")
        child = write_cfg(
            tmp_path / "child.cfg", "extends = base.cfg\nsigma = 2.0\nr-max = 4.0\n"
        )
        scn = load_scenario(child)
        assert scn.kind == "cloud"
        assert scn.get("sigma") == 2.0
        assert scn.get("r-max") == 4.0
        assert load_scenario(base).get("sigma") == 1.0

    def test_unknown_key_has_location(self, tmp_path):
        cfg = write_cfg(tmp_path / "bad.cfg", "scenario = cloud\n\nbogus = 1\n")
        with pytest.raises(ConfigError) as err:
            load_scenario(cfg)
        assert err.value.line == 3

    def test_malformed_line(self, tmp_path):
        cfg = write_cfg(tmp_path / "bad.cfg", "scenario cloud\n")
        with pytest.raises(ConfigError) as err:
            load_scenario(cfg)
        assert err.value.line == 1

    def test_vector_and_bool_values(self, tmp_path):
        cfg = write_cfg(
            tmp_path / "v.cfg",
            "scenario = evolve\nk = 0.5\npair = true\ntest-sigmas = 1.5 1 1\n",
        )
        scn = load_scenario(cfg)
        assert scn.get("pair") is True
        assert scn.get("test-sigmas") == [1.5, 1.0, 1.0]


class TestManifest:
    def test_roundtrip(self, tmp_path):
        m = RunManifest(scenario={"scenario": "cloud", "sigma": 1.0})
        m.add_check("x", True, value=0.5, tolerance=1.0)
        m.diagnostics["foo"] = [1.0, 2.0]
        p = tmp_path / "m.json"
        write_manifest(p, m)
        back = read_manifest(p)
        assert back.to_dict()["scenario"] == m.to_dict()["scenario"]
        assert compare_manifests(m, back) == {}

    def test_compare_detects_numeric_drift(self):
        a = RunManifest(scenario={"scenario": "cloud"}, diagnostics={"v": 1.0})
        b = RunManifest(scenario={"scenario": "cloud"}, diagnostics={"v": 1.1})
        diffs = compare_manifests(a, b, tolerance=1e-3)
        assert "diagnostics.v" in diffs
        assert compare_manifests(a, b, tolerance=0.2) == {}

    def test_compare_shape_mismatch(self):
        a = RunManifest(scenario={"scenario": "cloud", "distribution": "maxwellian"})
        b = RunManifest(scenario={"scenario": "kernel", "distribution": "maxwellian"})
        with pytest.raises(CompareError):
            compare_manifests(a, b)


class TestCommands:
    def test_penrose_stable_exit0(self, runner, tmp_path):
        cfg = write_cfg(tmp_path / "p.cfg",
                        "scenario = penrose\ndistribution = maxwellian\npotential = coulomb\n")
        res = runner.invoke(main, ["penrose", "--config", cfg, "--out", str(tmp_path / "o")])
        assert res.exit_code == 0
        m = read_manifest(tmp_path / "o" / "manifest.json")
        assert m.diagnostics["verdict"] == "STABLE"

    def test_penrose_unstable_exit2(self, runner, tmp_path):
        cfg = write_cfg(
            tmp_path / "p.cfg",
            "scenario = penrose\ndistribution = two-bump\nbump-separation = 4.0\n"
            "potential = coulomb\n",
        )
        res = runner.invoke(main, ["penrose", "--config", cfg, "--out", str(tmp_path / "o")])
        assert res.exit_code == 2
        m = read_manifest(tmp_path / "o" / "manifest.json")
        assert m.diagnostics["verdict"] == "UNSTABLE"
        assert (tmp_path / "o" / "penrose_offenders.csv").exists()

    def test_malformed_config_exit64_no_outputs(self, runner, tmp_path):
        cfg = write_cfg(tmp_path / "bad.cfg", "scenario = cloud\nwat = 1\n")
        out = tmp_path / "o"
        res = runner.invoke(main, ["cloud", "--config", cfg, "--out", str(out)])
        assert res.exit_code == 64
        assert not out.exists() or not list(out.iterdir())

    def test_cloud_checks_and_determinism(self, runner, tmp_path):
        cfg = write_cfg(
            tmp_path / "c.cfg",
            "scenario = cloud\ndistribution = maxwellian\npotential = coulomb\n"
            "sigma = 1.0\nr-count = 12\n",
        )
        outs = []
        for name in ("o1", "o2"):
            res = runner.invoke(main, ["cloud", "--config", cfg, "--out",
                                       str(tmp_path / name)])
            assert res.exit_code == 0, res.output
            outs.append((tmp_path / name / "cloud.csv").read_bytes())
        assert outs[0] == outs[1]  # byte-identical bodies
        m = read_manifest(tmp_path / "o1" / "manifest.json")
        assert m.all_passed()

    def test_compare_command(self, runner, tmp_path):
        cfg = write_cfg(
            tmp_path / "c.cfg",
            "scenario = cloud\ndistribution = maxwellian\npotential = coulomb\n"
            "sigma = 1.0\nr-count = 8\n",
        )
        for name in ("a", "b"):
            runner.invoke(main, ["cloud", "--config", cfg, "--out", str(tmp_path / name)])
        res = runner.invoke(
            main,
            ["compare", str(tmp_path / "a" / "manifest.json"),
             str(tmp_path / "b" / "manifest.json")],
        )
        assert res.exit_code == 0
        assert "agree" in res.output

    def test_compare_refined_within_tolerance(self, runner, tmp_path):
        base = write_cfg(
            tmp_path / "c.cfg",
            "scenario = cloud\ndistribution = maxwellian\npotential = coulomb\n"
            "sigma = 1.0\nr-count = 12\n",
        )
        fine = write_cfg(
            tmp_path / "f.cfg",
            "extends = c.cfg\ngrid-n = 2048\ngrid-u-max = 12.0\n",
        )
        runner.invoke(main, ["cloud", "--config", base, "--out", str(tmp_path / "a")])
        runner.invoke(main, ["cloud", "--config", fine, "--out", str(tmp_path / "b")])
        a = read_manifest(tmp_path / "a" / "manifest.json")
        b = read_manifest(tmp_path / "b" / "manifest.json")
        # converged quantities (induced charge, Yukawa deviation) barely move
        assert abs(a.diagnostics["induced_charge"] - b.diagnostics["induced_charge"]) < 1e-4

    def test_compare_shape_mismatch_cli(self, runner, tmp_path):
        m1 = RunManifest(scenario={"scenario": "cloud", "distribution": "maxwellian"})
        m2 = RunManifest(scenario={"scenario": "cloud", "distribution": "two-bump"})
        write_manifest(tmp_path / "a.json", m1)
        write_manifest(tmp_path / "b.json", m2)
        res = runner.invoke(main, ["compare", str(tmp_path / "a.json"),
                                   str(tmp_path / "b.json")])
        assert res.exit_code == 1

    def test_atomic_write_leaves_no_partials(self, tmp_path, monkeypatch):
        """A crash mid-emission leaves no partial files behind."""
        from plasmakin import config as cfgmod

        target = tmp_path / "x.csv"

        class Boom(RuntimeError):
            pass

        real_replace = cfgmod.os.replace

        def exploding_replace(src, dst):
            raise Boom("interrupted")

        monkeypatch.setattr(cfgmod.os, "replace", exploding_replace)
        with pytest.raises(Boom):
            cfgmod.write_csv(target, {"a": np.array([1.0])})
        monkeypatch.setattr(cfgmod.os, "replace", real_replace)
        assert not target.exists()
        assert not list(tmp_path.glob(".tmp-*"))
