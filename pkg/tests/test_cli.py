"""End-to-end command-line flows, exercised in process through main()."""

import hashlib
import json
import shutil
import subprocess

import pytest

from rsma_isac import ScenarioConfig, scenario_preset
from rsma_isac.cli import main

_S2_SMALL = ["--preset", "S2", "--set", "n_subcarriers=32"]


def _digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _run_sweep(out_dir, extra=()):
    return main(
        ["sweep", *_S2_SMALL, "--step", "0.5", "--family", "both",
         "--out", str(out_dir), *extra]
    )


def test_sweep_writes_outputs_and_manifest(tmp_path):
    out = tmp_path / "sw"
    assert _run_sweep(out) == 0
    names = ["points.csv", "boundary.csv", "boundary_params.csv"]
    for name in names + ["run.json"]:
        assert (out / name).exists()
    manifest = json.loads((out / "run.json").read_text())
    assert manifest["command"] == "sweep"
    assert manifest["scenario"]["n_subcarriers"] == 32
    assert manifest["sweep"]["families"] == ["MRT", "ZF"]
    for name in names:
        assert manifest["outputs"][name] == _digest(out / name)


def test_sweep_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run_sweep(a) == 0
    assert _run_sweep(b) == 0
    for name in ("points.csv", "boundary.csv", "boundary_params.csv", "run.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_reproduce_matches_manifest(tmp_path, capsys):
    out = tmp_path / "sw"
    assert _run_sweep(out) == 0
    redo = tmp_path / "redo"
    rc = main(["reproduce", "--run", str(out / "run.json"), "--out", str(redo)])
    assert rc == 0
    verdict = json.loads(capsys.readouterr().out)
    assert verdict["status"] == "ok"
    for name in ("points.csv", "boundary.csv", "boundary_params.csv"):
        assert (redo / name).read_bytes() == (out / name).read_bytes()


def test_reproduce_rejects_tampered_digest(tmp_path, capsys):
    out = tmp_path / "sw"
    assert _run_sweep(out) == 0
    manifest = json.loads((out / "run.json").read_text())
    digest = manifest["outputs"]["points.csv"]
    manifest["outputs"]["points.csv"] = ("0" if digest[0] != "0" else "1") + digest[1:]
    tampered = tmp_path / "tampered.json"
    tampered.write_text(json.dumps(manifest))
    rc = main(["reproduce", "--run", str(tampered), "--out", str(tmp_path / "redo")])
    assert rc == 3
    captured = capsys.readouterr()
    assert '"mismatch"' in captured.out
    err = json.loads(captured.err)
    assert err["error"]["type"] == "ReproduceMismatchError"


def test_reproduce_missing_manifest(tmp_path):
    rc = main(["reproduce", "--run", str(tmp_path / "nope.json")])
    assert rc == 2


def _point_eval(out_dir, params, extra=()):
    sets = [f"--set={k}={v}" for k, v in params.items()]
    return main(
        ["point-eval", "--preset", "S1", "--set", "n_subcarriers=64",
         *sets, "--out", str(out_dir), *extra]
    )


def test_point_eval_sensing_only(tmp_path, capsys):
    out = tmp_path / "pt"
    rc = _point_eval(out, dict(t_comms=0, t_p=1, alpha_c=1, alpha_p=1))
    assert rc == 0
    payload = json.loads((out / "point.json").read_text())
    assert payload == json.loads(capsys.readouterr().out)
    assert payload["g0"] == 2.0
    assert payload["t_sum_bps"] == 0.0
    assert payload["stream_powers"]["sensing"] == pytest.approx(1.0, rel=1e-12)
    assert payload["stream_powers"]["common"] == 0.0
    assert payload["case"] == "General"
    assert not payload["collapsed"]
    assert payload["mcs_indices"] == [None, None, None]
    assert isinstance(payload["crb_bins2"], float)

    redo = tmp_path / "redo"
    rc = main(["reproduce", "--run", str(out / "run.json"), "--out", str(redo)])
    assert rc == 0
    assert (redo / "point.json").read_bytes() == (out / "point.json").read_bytes()


def test_point_eval_hard_split(tmp_path):
    out = tmp_path / "pt"
    rc = _point_eval(out, dict(t_comms=0.6, t_p=1, alpha_c=1, alpha_p=1))
    assert rc == 0
    payload = json.loads((out / "point.json").read_text())
    assert payload["case"] == "SDMA_Sense_Hard"
    assert payload["stream_powers"]["sensing"] == pytest.approx(0.4, rel=1e-9)
    assert payload["stream_powers"]["common"] == 0.0
    assert payload["t_common_bps"] == 0.0
    assert payload["t_sum_bps"] > 0.0


def test_point_eval_missing_param(tmp_path, capsys):
    rc = _point_eval(tmp_path / "pt", dict(t_comms=0.5, t_p=1, alpha_c=1))
    assert rc == 2
    err = json.loads(capsys.readouterr().err)
    assert "alpha_p" in err["error"]["message"]


def test_point_eval_rejects_both_family(tmp_path):
    rc = _point_eval(
        tmp_path / "pt",
        dict(t_comms=0.5, t_p=1, alpha_c=1, alpha_p=1),
        extra=("--family", "both"),
    )
    assert rc == 2


def test_point_eval_same_seed_same_output(tmp_path, capsys):
    params = dict(t_comms=0.7, t_p=0.5, alpha_c=0.5, alpha_p=0.5)
    assert _point_eval(tmp_path / "a", params) == 0
    first = capsys.readouterr().out
    assert _point_eval(tmp_path / "b", params) == 0
    second = capsys.readouterr().out
    assert first == second
    assert (tmp_path / "a/point.json").read_bytes() == (
        tmp_path / "b/point.json"
    ).read_bytes()


def test_point_eval_gap_override_monotone(tmp_path):
    params = dict(t_comms=1, t_p=0.5, alpha_c=0.5, alpha_p=0.5)
    sums = []
    for i, gap in enumerate((0.0, 3.0)):
        out = tmp_path / f"g{i}"
        rc = _point_eval(out, dict(params, shannon_gap_db=gap))
        assert rc == 0
        sums.append(json.loads((out / "point.json").read_text())["t_sum_bps"])
    assert sums[0] > 0.0
    assert sums[1] <= sums[0]


def test_seed_and_overrides_land_in_manifest(tmp_path):
    out = tmp_path / "sw"
    rc = _run_sweep(out, extra=("--seed", "123", "--set", "total_power=2.0"))
    assert rc == 0
    scenario = json.loads((out / "run.json").read_text())["scenario"]
    assert scenario["seed"] == 123
    assert scenario["total_power"] == 2.0


def test_scenario_file_input(tmp_path):
    cfg = scenario_preset("S3")
    path = tmp_path / "scenario.json"
    path.write_text(cfg.to_json())
    out = tmp_path / "pt"
    rc = main(
        ["point-eval", "--scenario", str(path),
         "--set", "t_comms=1", "--set", "t_p=1",
         "--set", "alpha_c=1", "--set", "alpha_p=1", "--out", str(out)]
    )
    assert rc == 0
    manifest = json.loads((out / "run.json").read_text())
    assert ScenarioConfig.from_json_dict(manifest["scenario"]) == cfg


def test_missing_scenario_file(tmp_path):
    rc = main(
        ["sweep", "--scenario", str(tmp_path / "absent.json"),
         "--out", str(tmp_path / "o")]
    )
    assert rc == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep", "--set", "warp_factor=9"],
        ["sweep", "--set", "nodelimiter"],
        ["sweep", "--step", "0.3"],
        ["sweep", "--family", "qr"],
    ],
)
def test_bad_configuration_exits_2(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path / "o")]) == 2


def test_bad_preset_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--preset", "S9", "--out", str(tmp_path / "o")])
    assert exc.value.code == 2


@pytest.fixture(scope="module")
def heatmap_flow(tmp_path_factory):
    root = tmp_path_factory.mktemp("heatmap")
    sw = root / "sw"
    rc = main(
        ["sweep", "--preset", "S1", "--set", "n_subcarriers=64",
         "--step", "0.5", "--family", "mrt", "--out", str(sw)]
    )
    assert rc == 0
    hm = root / "hm"
    rc = main(
        ["radar-heatmap", "--preset", "S1", "--set", "n_subcarriers=64",
         "--params", str(sw / "boundary_params.csv"), "--n0", "1,2,3",
         "--trials", "20", "--beta", "0.5", "--out", str(hm)]
    )
    assert rc == 0
    return sw, hm


def test_boundary_params_file_exact(heatmap_flow):
    sw, _ = heatmap_flow
    lines = (sw / "boundary_params.csv").read_text().splitlines()
    assert lines == [
        "index,t_comms,t_p,alpha_c,alpha_p,mcs_c,mcs_1,mcs_2",
        "0,1,0,0,-,8,-,-",
        "1,0.5,0.5,0,1,1,6,6",
        "2,1,0.5,0,1,1,7,7",
        "3,1,1,-,1,-,8,8",
    ]


def test_heatmap_rows(heatmap_flow):
    _, hm = heatmap_flow
    lines = (hm / "heatmap.csv").read_text().splitlines()
    assert lines[0] == "index,n0,bin,snr_db,peak_correct"
    rows = [line.split(",") for line in lines[1:]]
    assert len(rows) == 12  # 4 boundary rows x 3 delays

    by_index = {}
    for index, n0, bin_, snr_db, correct in rows:
        by_index.setdefault(index, []).append(
            (int(n0), int(bin_), float(snr_db), float(correct))
        )
    assert set(by_index) == {"0", "1", "2", "3"}
    for entries in by_index.values():
        assert [e[0] for e in entries] == [1, 2, 3]
        snrs = [e[2] for e in entries]
        # the echo amplitude halves per delay step, so measured SNR drops
        assert snrs[0] > snrs[1] > snrs[2]
        for n0, bin_, _, correct in entries:
            assert correct >= 0.8
            if n0 == 1:
                assert correct == 1.0
            if correct == 1.0:
                assert bin_ == n0


def test_heatmap_reproduces(heatmap_flow, tmp_path, capsys):
    _, hm = heatmap_flow
    redo = tmp_path / "redo"
    rc = main(["reproduce", "--run", str(hm / "run.json"), "--out", str(redo)])
    assert rc == 0
    assert (redo / "heatmap.csv").read_bytes() == (hm / "heatmap.csv").read_bytes()


def test_heatmap_zero_trials(heatmap_flow, tmp_path):
    sw, _ = heatmap_flow
    out = tmp_path / "hm0"
    rc = main(
        ["radar-heatmap", "--preset", "S1", "--set", "n_subcarriers=64",
         "--params", str(sw / "boundary_params.csv"), "--trials", "0",
         "--out", str(out)]
    )
    assert rc == 0
    assert (out / "heatmap.csv").read_text() == "index,n0,bin,snr_db,peak_correct\n"


def test_heatmap_missing_params_file(tmp_path):
    rc = main(
        ["radar-heatmap", "--params", str(tmp_path / "absent.csv"),
         "--out", str(tmp_path / "o")]
    )
    assert rc == 2


def test_heatmap_bad_inputs(heatmap_flow, tmp_path):
    sw, _ = heatmap_flow
    params = str(sw / "boundary_params.csv")
    base = ["radar-heatmap", "--preset", "S1", "--set", "n_subcarriers=64",
            "--params", params, "--out", str(tmp_path / "o")]
    assert main(base + ["--n0", "1,foo"]) == 2
    assert main(base + ["--n0", "70"]) == 2
    assert main(base + ["--family", "both"]) == 2


def test_calibrate_demo(tmp_path, capsys):
    out = tmp_path / "cal"
    rc = main(["calibrate-demo", "--preset", "S2",
               "--set", "n_subcarriers=64", "--out", str(out)])
    assert rc == 0
    payload = json.loads((out / "calibration.json").read_text())
    assert payload == json.loads(capsys.readouterr().out)
    assert payload["correction"] == -payload["delta_phi"]
    before = payload["misalignment_before_rad"]
    after = payload["misalignment_after_rad"]
    assert after < 0.05
    assert after < before / 5.0

    redo = tmp_path / "redo"
    rc = main(["reproduce", "--run", str(out / "run.json"), "--out", str(redo)])
    assert rc == 0


def test_console_script_installed():
    exe = shutil.which("rsma-isac")
    assert exe is not None
    proc = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "sweep" in proc.stdout
