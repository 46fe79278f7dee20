import json
import re

import numpy as np
import pytest

from kinetostat import GridSpec, KinetostatError, bundled_model_path, load_model
from kinetostat.cli import main
from kinetostat.errors import ModelConfigError

PUU_CFG = str(bundled_model_path("orthoglide-puu.cfg"))
PRPAR_CFG = str(bundled_model_path("orthoglide-prpar.cfg"))


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def soft_chain_doc(max_iterations=50):
    """A deliberately soft single-chain model for failure-path tests."""
    return {
        "name": "soft-test",
        "architecture": "chains",
        "chains": [{
            "elements": [
                {"type": "actuated", "kind": "prismatic", "axis": "x",
                 "nominal": 100.0, "control_stiffness": 50.0},
                {"type": "spring",
                 "stiffness": np.diag([30.0, 30.0, 30.0, 800.0, 800.0, 800.0]).tolist()},
                {"type": "passive", "kind": "revolute", "axis": "z"},
                {"type": "passive", "kind": "revolute", "axis": "y"},
                {"type": "rigid", "translation": [200.0, 0.0, 0.0]},
                {"type": "spring",
                 "stiffness": np.diag([25.0, 25.0, 25.0, 600.0, 600.0, 600.0]).tolist()},
                {"type": "passive", "kind": "revolute", "axis": "y"},
                {"type": "passive", "kind": "revolute", "axis": "z"},
            ]
        }],
        "solver": {"max_iterations": max_iterations},
    }


class TestModelLoading:
    def test_bundled_models_parse(self):
        for path in (PUU_CFG, PRPAR_CFG):
            cfg = load_model(path)
            assert cfg.chain_count() == 3
            chains, nominals, pose = cfg.instantiate((0.0, 0.0, 0.0))
            assert len(chains) == 3
            assert chains[0].n_virtual == 13

    def test_bad_json_reports_line(self, tmp_path):
        p = tmp_path / "broken.cfg"
        p.write_text('{\n  "name": "x",\n  bad\n}\n')
        with pytest.raises(ModelConfigError, match=r"line 3"):
            load_model(p)

    def test_schema_violation_reports_path(self, tmp_path):
        doc = soft_chain_doc()
        doc["chains"][0]["elements"][1] = {"type": "spring"}  # no stiffness source
        p = tmp_path / "bad.cfg"
        p.write_text(json.dumps(doc))
        with pytest.raises(ModelConfigError, match=r"chains\[0\].elements\[1\]"):
            load_model(p)

    def test_asymmetric_spring_rejected_with_location(self, tmp_path):
        doc = soft_chain_doc()
        k = np.diag([1e4] * 6)
        k[0, 1] = 500.0
        doc["chains"][0]["elements"][1] = {"type": "spring", "stiffness": k.tolist()}
        p = tmp_path / "asym.cfg"
        p.write_text(json.dumps(doc))
        with pytest.raises(ModelConfigError, match=r"elements\[1\].*symmetric"):
            load_model(p)

    def test_missing_compliance_file_named(self, tmp_path):
        doc = soft_chain_doc()
        doc["chains"][0]["elements"][1] = {"type": "spring",
                                           "compliance_file": "nowhere.txt"}
        p = tmp_path / "ref.cfg"
        p.write_text(json.dumps(doc))
        with pytest.raises(ModelConfigError, match="nowhere.txt"):
            load_model(p)

    def test_compliance_file_text_and_json(self, tmp_path):
        c = np.diag([1e-4, 1e-4, 1e-4, 1e-7, 1e-7, 1e-7])
        (tmp_path / "c.txt").write_text(
            "\n".join(" ".join(repr(v) for v in row) for row in c))
        (tmp_path / "c.json").write_text(json.dumps({"compliance": c.tolist()}))
        for ref in ("c.txt", "c.json"):
            doc = soft_chain_doc()
            doc["chains"][0]["elements"][1] = {"type": "spring", "compliance_file": ref}
            p = tmp_path / f"m-{ref}.cfg"
            p.write_text(json.dumps(doc))
            cfg = load_model(p)
            blocks = cfg.chain_templates[0].spring_blocks
            np.testing.assert_allclose(blocks[1], np.linalg.inv(c), rtol=1e-9)


class TestGridSpec:
    def test_parse_and_count(self):
        g = GridSpec.parse("0:100:3,-50:50:2,0:0:1")
        assert g.point_count == 6
        pts = list(g.points())
        assert len(pts) == 6
        np.testing.assert_array_equal(pts[0], [0, -50, 0])
        np.testing.assert_array_equal(pts[-1], [100, 50, 0])

    def test_invalid_specs(self):
        with pytest.raises(KinetostatError):
            GridSpec.parse("0:1:2,0:1:2")
        with pytest.raises(KinetostatError):
            GridSpec.parse("5:0:2,0:1:2,0:1:2")
        with pytest.raises(KinetostatError):
            GridSpec.parse("0:1:0,0:1:2,0:1:2")


class TestValidateCommand:
    def test_bundled_model_valid(self, capsys):
        code, out, _ = run(capsys, "validate", "--model", PUU_CFG)
        assert code == 0
        assert "n=4 passive, m=13 elastic" in out
        assert out.count("chain") == 3

    def test_invalid_model_exit_2(self, capsys, tmp_path):
        doc = soft_chain_doc()
        k = np.diag([1e4] * 6)
        k[0, 1] = 500.0
        doc["chains"][0]["elements"][1] = {"type": "spring", "stiffness": k.tolist()}
        p = tmp_path / "asym.cfg"
        p.write_text(json.dumps(doc))
        code, _, err = run(capsys, "validate", "--model", str(p))
        assert code == 2
        assert "elements[1]" in err

    def test_usage_error_exit_1(self, capsys):
        code, _, _ = run(capsys, "stiffness", "--model", PUU_CFG, "--point", "1,2")
        assert code == 1


def parse_table_matrix(text, header):
    lines = text.splitlines()
    start = next(i for i, line in enumerate(lines) if line.startswith(header)) + 1
    rows = []
    while start < len(lines) and lines[start].startswith("  "):
        rows.append([float(v) for v in lines[start].split()])
        start += 1
    return np.array(rows)


class TestStiffnessCommand:
    def test_isotropic_structure_at_centre(self, capsys):
        code, out, _ = run(capsys, "stiffness", "--model", PUU_CFG,
                           "--point", "0,0,0", "--format", "json")
        assert code == 0
        doc = json.loads(out)
        ct = np.array(doc["compliance_translational"])
        diag = np.diag(ct)
        np.testing.assert_allclose(diag, diag[0], rtol=1e-9)
        assert np.abs(ct - np.diag(diag)).max() <= 1e-8 * diag[0]
        np.testing.assert_array_equal(doc["wrench"], np.zeros(6))

    def test_zero_deflection_bit_identical_to_unloaded(self, capsys):
        code1, out1, _ = run(capsys, "stiffness", "--model", PUU_CFG,
                             "--point", "10,20,-5", "--format", "json")
        code2, out2, _ = run(capsys, "stiffness", "--model", PUU_CFG,
                             "--point", "10,20,-5", "--deflection", "0,0,0,0,0,0",
                             "--format", "json")
        assert code1 == code2 == 0
        assert out1 == out2

    def test_loaded_mode_emits_wrench(self, capsys):
        code, out, _ = run(capsys, "stiffness", "--model", PUU_CFG,
                           "--point", "126.35,126.35,126.35",
                           "--deflection", "0.5,0.5,0.5,0,0,0", "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert np.linalg.norm(np.array(doc["wrench"])[:3]) > 1e3

    def test_json_and_table_agree_to_12_digits(self, capsys):
        _, table, _ = run(capsys, "stiffness", "--model", PRPAR_CFG,
                          "--point", "-73.65,-73.65,-73.65")
        _, js, _ = run(capsys, "stiffness", "--model", PRPAR_CFG,
                       "--point", "-73.65,-73.65,-73.65", "--format", "json")
        doc = json.loads(js)
        k_table = parse_table_matrix(table, "stiffness")
        k_json = np.array(doc["stiffness"])
        scale = np.abs(k_json).max()
        assert np.abs(k_table - k_json).max() <= 1e-12 * scale

    def test_paper_scale(self, capsys):
        _, plain, _ = run(capsys, "stiffness", "--model", PUU_CFG,
                          "--point", "0,0,0", "--format", "json")
        _, scaled, _ = run(capsys, "stiffness", "--model", PUU_CFG,
                           "--point", "0,0,0", "--format", "json", "--paper-scale")
        a = json.loads(plain)
        b = json.loads(scaled)
        np.testing.assert_allclose(
            np.array(b["compliance_translational"]),
            1e4 * np.array(a["compliance_translational"]), rtol=1e-15)
        np.testing.assert_allclose(
            np.array(b["compliance_rotational"]),
            1e7 * np.array(a["compliance_rotational"]), rtol=1e-15)

    def test_out_of_workspace_exit_3(self, capsys):
        code, _, err = run(capsys, "stiffness", "--model", PUU_CFG,
                           "--point", "0,300,0")
        assert code == 3
        assert "workspace" in err

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "k.json"
        code, out, _ = run(capsys, "stiffness", "--model", PUU_CFG,
                           "--point", "0,0,0", "--format", "json",
                           "--out", str(target))
        assert code == 0 and out == ""
        json.loads(target.read_text())


class TestEquilibriumCommand:
    def test_zero_deflection(self, capsys):
        code, out, _ = run(capsys, "equilibrium", "--model", PUU_CFG,
                           "--point", "0,0,0")
        assert code == 0
        doc = json.loads(out)
        np.testing.assert_array_equal(doc["total_wrench"], np.zeros(6))
        assert [c["iterations"] for c in doc["chains"]] == [1, 1, 1]

    def test_small_deflection_matches_stiffness(self, capsys):
        delta = np.array([1e-3, -2e-3, 1.5e-3, 0, 0, 0])
        _, ks, _ = run(capsys, "stiffness", "--model", PUU_CFG,
                       "--point", "0,0,0", "--format", "json")
        k = np.array(json.loads(ks)["stiffness"])
        _, eq, _ = run(capsys, "equilibrium", "--model", PUU_CFG,
                       "--point", "0,0,0",
                       "--deflection", ",".join(repr(v) for v in delta))
        total = np.array(json.loads(eq)["total_wrench"])
        predicted = k @ delta
        assert np.linalg.norm(total - predicted) <= 1e-2 * np.linalg.norm(predicted)

    def test_soft_model_failure_exit_3(self, capsys, tmp_path):
        p = tmp_path / "soft.cfg"
        p.write_text(json.dumps(soft_chain_doc(max_iterations=1)))
        code, _, err = run(capsys, "equilibrium", "--model", str(p),
                           "--point", "285,0,0", "--deflection", "3,1,0,0,0,0")
        assert code == 3
        assert "residuals" in err


class TestMapCommand:
    def test_single_point_matches_stiffness(self, capsys):
        code, out, _ = run(capsys, "map", "--model", PUU_CFG,
                           "--grid", "0:0:1,0:0:1,0:0:1")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "x_mm,y_mm,z_mm,value"
        assert len(lines) == 2
        value = float(lines[1].split(",")[3])
        _, js, _ = run(capsys, "stiffness", "--model", PUU_CFG,
                       "--point", "0,0,0", "--format", "json")
        k = np.array(json.loads(js)["stiffness"])
        expect = np.linalg.eigvalsh(k[:3, :3]).min()
        np.testing.assert_allclose(value, expect, rtol=1e-12)

    def test_row_count_is_grid_product(self, capsys):
        code, out, _ = run(capsys, "map", "--model", PRPAR_CFG,
                           "--grid", "-30:30:2,-30:30:3,0:0:1")
        assert code == 0
        assert len(out.strip().splitlines()) == 1 + 2 * 3 * 1

    def test_corner_ordering(self, capsys):
        code, out, _ = run(capsys, "map", "--model", PUU_CFG,
                           "--grid", "-73.65:126.35:2,-73.65:126.35:2,-73.65:126.35:2")
        assert code == 0
        rows = {tuple(float(v) for v in line.split(",")[:3]): float(line.split(",")[3])
                for line in out.strip().splitlines()[1:]}
        near = rows[(-73.65, -73.65, -73.65)]
        far = rows[(126.35, 126.35, 126.35)]
        assert near > far  # stiffer near the base-side corner

    def test_unreachable_point_nan_zero_exit(self, capsys):
        code, out, err = run(capsys, "map", "--model", PUU_CFG,
                             "--grid", "0:280:2,0:0:1,0:0:1")
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 3
        assert lines[-1].endswith("nan")
        assert "1 of 2" in err

    def test_thread_cap_preserves_output(self, capsys, monkeypatch):
        _, serial, _ = run(capsys, "map", "--model", PUU_CFG,
                           "--grid", "-50:50:2,-50:50:2,0:0:1")
        monkeypatch.setenv("KINETOSTAT_THREADS", "3")
        _, threaded, _ = run(capsys, "map", "--model", PUU_CFG,
                             "--grid", "-50:50:2,-50:50:2,0:0:1")
        assert serial == threaded


class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ("stiffness", "--model", PUU_CFG, "--point", "30,-20,10",
         "--deflection", "0.2,0.1,-0.1,0,0,0", "--format", "json"),
        ("equilibrium", "--model", PRPAR_CFG, "--point", "10,10,10",
         "--deflection", "0.05,0,0,0,0,0"),
        ("map", "--model", PUU_CFG, "--grid", "-40:40:2,0:0:1,-40:40:2"),
    ])
    def test_reruns_bit_identical(self, capsys, argv):
        code1, out1, _ = run(capsys, *argv)
        code2, out2, _ = run(capsys, *argv)
        assert code1 == code2 == 0
        assert out1 == out2
