import json
import math
import subprocess
import sys

import pytest

from duelplots import FigureSpec, RenderError, render

HEADER = "experiment,policy,k,t,s,v,regret_kind,benchmark,mean,std,n"


def power_law_csv(tmp_path, policies=("alpha", "beta"), exponent=0.5):
    lines = [HEADER]
    for i, name in enumerate(policies):
        c = 2.0 + i
        for t in (64, 256, 1024, 4096):
            lines.append(f"exp,{name},10,{t},,,static,best_fixed,{c * t ** exponent!r},0.5,10")
    path = tmp_path / "agg.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


class TestRender:
    def test_power_law_fidelity(self, tmp_path):
        # plotted points equal CSV means; sqrt reference overlays exactly
        csv_path = power_law_csv(tmp_path)
        out = tmp_path / "fig.png"
        image, sidecar = render(FigureSpec(
            csv_path=str(csv_path), output_path=str(out),
            reference_exponent=0.5, loglog=True,
        ))
        assert out.exists() and out.stat().st_size > 0
        doc = json.loads(open(sidecar).read())
        assert [s["policy"] for s in doc["series"]] == ["alpha", "beta"]
        for s in doc["series"]:
            c = 2.0 if s["policy"] == "alpha" else 3.0
            for x, m in zip(s["x"], s["mean"]):
                assert abs(m - c * math.sqrt(x)) < 1e-9
        assert doc["reference"]["max_relative_gap"] < 1e-6
        assert doc["reference"]["anchor_policy"] == "alpha"

    def test_missing_column_clean_error(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("experiment,policy,mean\nexp,alpha,1.0\n")
        out = tmp_path / "fig.png"
        with pytest.raises(RenderError, match="missing columns"):
            render(FigureSpec(csv_path=str(path), output_path=str(out)))
        assert not out.exists()

    def test_empty_selection_no_file(self, tmp_path):
        csv_path = power_law_csv(tmp_path)
        out = tmp_path / "fig.png"
        with pytest.raises(RenderError, match="no rows"):
            render(FigureSpec(csv_path=str(csv_path), output_path=str(out),
                              policies=["nope"]))
        assert not out.exists()

    def test_duplicate_rows_need_filter(self, tmp_path):
        path = tmp_path / "agg.csv"
        path.write_text(
            HEADER + "\n"
            "exp,alpha,10,64,,,static,best_fixed,1.0,0.1,5\n"
            "exp,alpha,10,64,,,dynamic,per_step,2.0,0.1,5\n"
        )
        with pytest.raises(RenderError, match="multiple rows"):
            render(FigureSpec(csv_path=str(path), output_path=str(tmp_path / "f.png")))
        image, sidecar = render(FigureSpec(
            csv_path=str(path), output_path=str(tmp_path / "f.png"),
            regret_kind="static",
        ))
        doc = json.loads(open(sidecar).read())
        assert doc["series"][0]["mean"] == [1.0]

    def test_sidecar_deterministic(self, tmp_path):
        csv_path = power_law_csv(tmp_path)
        spec = lambda out: FigureSpec(csv_path=str(csv_path), output_path=str(out),
                                      reference_exponent=0.5)
        _, s1 = render(spec(tmp_path / "a.png"))
        _, s2 = render(spec(tmp_path / "b.png"))
        assert open(s1, "rb").read() == open(s2, "rb").read()

    def test_bad_exponent(self, tmp_path):
        with pytest.raises(RenderError, match="exponent"):
            FigureSpec(csv_path="x", output_path="y", reference_exponent=1.5)

    def test_k_axis(self, tmp_path):
        path = tmp_path / "agg.csv"
        path.write_text(
            HEADER + "\n"
            "exp,alpha,4,1000,,,static,best_fixed,1.0,0.1,5\n"
            "exp,alpha,8,1000,,,static,best_fixed,2.0,0.1,5\n"
        )
        _, sidecar = render(FigureSpec(csv_path=str(path),
                                       output_path=str(tmp_path / "f.png"), axis="K"))
        doc = json.loads(open(sidecar).read())
        assert doc["series"][0]["x"] == [4.0, 8.0]


class TestCli:
    def run_cli(self, *args):
        return subprocess.run([sys.executable, "-m", "duelplots.cli", *args],
                              capture_output=True, text=True)

    def test_render_command(self, tmp_path):
        csv_path = power_law_csv(tmp_path)
        out = tmp_path / "fig.png"
        res = self.run_cli("render", "--csv", str(csv_path), "--axis", "T",
                           "--ref", "0.5", "--loglog", "-o", str(out))
        assert res.returncode == 0, res.stderr
        assert out.exists()
        assert (tmp_path / "fig.png.points.json").exists()

    def test_error_exit_code(self, tmp_path):
        res = self.run_cli("render", "--csv", str(tmp_path / "missing.csv"),
                           "-o", str(tmp_path / "f.png"))
        assert res.returncode == 2
        assert "error:" in res.stderr
