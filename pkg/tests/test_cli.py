import dataclasses

import numpy as np
import pytest

import scdmi.verify as verify_mod
from scdmi.algebra import MomentPolynomial, MonomialTerm, catalogue_specs
from scdmi.cli import main
from scdmi.engine import RasterImage
from scdmi.ppm import read_ppm, write_ppm
from scdmi.synthetic import blob_image
from scdmi.transforms import ColorAffine, apply_color_affine


class TestPpm:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        rgb = rng.integers(0, 256, size=(9, 7, 3)).astype(np.float64) / 255.0
        img = RasterImage.from_array(rgb)
        path = tmp_path / "img.ppm"
        write_ppm(path, img)
        back = read_ppm(path)
        assert np.array_equal(back.red, img.red)
        assert back.mask.all()

    def test_comment_in_header(self, tmp_path):
        path = tmp_path / "c.ppm"
        path.write_bytes(b"P6\n# a comment\n2 1\n255\n" + bytes(6))
        img = read_ppm(path)
        assert (img.width, img.height) == (2, 1)

    def test_rejects_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.ppm"
        path.write_bytes(b"P5\n2 2\n255\n" + bytes(4))
        with pytest.raises(ValueError):
            read_ppm(path)

    def test_rejects_truncated(self, tmp_path):
        path = tmp_path / "short.ppm"
        path.write_bytes(b"P6\n4 4\n255\n" + bytes(5))
        with pytest.raises(ValueError):
            read_ppm(path)

    def test_rejects_wide_maxval(self, tmp_path):
        path = tmp_path / "wide.ppm"
        path.write_bytes(b"P6\n1 1\n65535\n" + bytes(6))
        with pytest.raises(ValueError):
            read_ppm(path)


class TestGen:
    def test_file_count_and_manifest(self, tmp_path):
        out = tmp_path / "polys"
        assert main(["gen", "--out", str(out)]) == 0
        polys = sorted(p.name for p in out.glob("*.poly"))
        assert len(polys) == 51
        assert "denominator.poly" in polys
        assert "scdmi_k0_3.poly" in polys and "scdmi_k1_25.poly" in polys
        lines = (out / "manifest.csv").read_text().strip().split("\n")
        assert lines[0] == "id,k,n,m,N,M,e,term_count"
        assert len(lines) == 51
        row3 = lines[3].split(",")
        assert row3[:2] == ["3", "0"]
        assert row3[6] == "9/2"
        assert row3[7] == "6"

    def test_rerun_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        main(["gen", "--out", str(a)])
        main(["gen", "--out", str(b)])
        for pa in sorted(a.iterdir()):
            assert pa.read_bytes() == (b / pa.name).read_bytes()


class TestFeatures:
    def test_grayscale_flags_false(self, tmp_path):
        g = np.random.default_rng(1).uniform(0, 1, (8, 8))
        write_ppm(tmp_path / "gray.ppm", RasterImage(g, g, g, np.ones((8, 8), bool)))
        out = tmp_path / "out"
        assert main(["features", str(tmp_path / "gray.ppm"), "--out", str(out)]) == 0
        rows = (out / "features.csv").read_text().strip().split("\n")
        assert len(rows) == 2
        fields = rows[1].split(",")
        assert fields[51:101] == ["0"] * 50

    def test_duplicate_input_identical_rows(self, tmp_path):
        write_ppm(tmp_path / "a.ppm", blob_image(0, size=16))
        out = tmp_path / "out"
        p = str(tmp_path / "a.ppm")
        assert main(["features", p, p, "--out", str(out)]) == 0
        rows = (out / "features.csv").read_text().strip().split("\n")
        assert rows[1] == rows[2]

    def test_channel_permutation_exactness_through_ppm(self, tmp_path):
        img = blob_image(5, size=32)
        # cyclic permutation: nonsingular, det +1, preserves the 8-bit grid
        perm = ColorAffine(np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]))
        write_ppm(tmp_path / "a.ppm", img)
        write_ppm(tmp_path / "b.ppm", apply_color_affine(img, perm))
        out = tmp_path / "out"
        assert main(["features", str(tmp_path / "a.ppm"), str(tmp_path / "b.ppm"), "--out", str(out)]) == 0
        rows = (out / "features.csv").read_text().strip().split("\n")
        va = np.array([float(v) for v in rows[1].split(",")[1:51]])
        vb = np.array([float(v) for v in rows[2].split(",")[1:51]])
        ka = np.array([v == "1" for v in rows[1].split(",")[51:101]])
        kb = np.array([v == "1" for v in rows[2].split(",")[51:101]])
        both = ka & kb
        assert both.any()
        dev = np.abs(vb - va) / np.maximum(np.abs(va), 1e-12)
        assert dev[both].max() <= 1e-9

    def test_unreadable_file_sets_exit_code(self, tmp_path):
        out = tmp_path / "out"
        rc = main(["features", str(tmp_path / "missing.ppm"), "--out", str(out)])
        assert rc == 2
        # partial failure still succeeds with the readable rows
        write_ppm(tmp_path / "ok.ppm", blob_image(1, size=16))
        rc = main(
            ["features", str(tmp_path / "missing.ppm"), str(tmp_path / "ok.ppm"), "--out", str(out)]
        )
        assert rc == 0


class TestVerifyCommand:
    def test_default_run_passes(self, tmp_path):
        out = tmp_path / "v"
        assert main(["verify", "--out", str(out)]) == 0
        lines = (out / "verify.csv").read_text().strip().split("\n")
        assert lines[0] == "suite,id,k,deviation,threshold,status"
        assert all(",pass" in line for line in lines[1:])

    def test_injected_corruption_fails_exactly_that_instance(self, tmp_path, monkeypatch):
        target_id, target_k = 7, 0
        specs = []
        for spec in catalogue_specs():
            if spec.id == target_id and spec.k == target_k:
                first = spec.numerator.terms[0]
                corrupted = MomentPolynomial(
                    (MonomialTerm(first.coefficient + 1, first.factors),)
                    + spec.numerator.terms[1:]
                )
                spec = dataclasses.replace(spec, numerator=corrupted)
            specs.append(spec)
        monkeypatch.setattr(verify_mod, "catalogue_specs", lambda: tuple(specs))
        rows = verify_mod.oracle_suite(seed=0, n_images=1)
        failing = {(r.id, r.k) for r in rows if not r.passed}
        assert failing == {(f"img0_inst{target_id}", target_k)}


class TestBenchCommand:
    def test_synthetic_outputs_and_determinism(self, tmp_path):
        args = ["bench", "--synthetic", "--classes", "3", "--transforms", "4",
                "--size", "48", "--seed", "5"]
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        acc_text = (a / "accuracy.csv").read_text()
        acc_lines = acc_text.strip().split("\n")
        assert acc_lines[0] == "descriptor,accuracy"
        assert len(acc_lines) == 8
        # round-trip float formatting, no numpy repr leakage
        assert "np." not in acc_text
        for line in acc_lines[1:]:
            value = line.split(",")[1]
            assert repr(float(value)) == value
        assert (a / "accuracy.csv").read_bytes() == (b / "accuracy.csv").read_bytes()
        assert (a / "pr_curves.csv").read_bytes() == (b / "pr_curves.csv").read_bytes()
        pr_lines = (a / "pr_curves.csv").read_text().strip().split("\n")
        assert len(pr_lines) == 1 + 7 * 11
        assert (a / "dataset_manifest.csv").exists()

    def test_manifest_driven_run(self, tmp_path):
        import csv

        data = tmp_path / "data"
        data.mkdir()
        rows = []
        for c in range(2):
            for i in range(4):
                name = f"im_{c}_{i}.ppm"
                write_ppm(data / name, blob_image(10 * c + i // 2, size=24))
                rows.append([name, f"c{c}", "train" if i == 0 else "test"])
        with (data / "manifest.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path", "label", "split"])
            w.writerows(rows)
        out = tmp_path / "out"
        assert main(["bench", str(data / "manifest.csv"), "--out", str(out)]) == 0
        assert (out / "accuracy.csv").exists()

    def test_bad_manifest_reports_row(self, tmp_path):
        bad = tmp_path / "m.csv"
        bad.write_text("path,label,split\nx.ppm,c0,bogus\n")
        rc = main(["bench", str(bad), "--out", str(tmp_path / "o")])
        assert rc == 2

    def test_bench_without_dataset_is_usage_error(self, tmp_path):
        assert main(["bench", "--out", str(tmp_path / "o")]) == 2
