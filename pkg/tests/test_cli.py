import json
import xml.etree.ElementTree as ET

from irm_planner.cli import main


def run(*argv):
    return main([str(a) for a in argv])


def test_rm_and_irm_build(tmp_path, small_config, capsys):
    rm_path = tmp_path / "rm.json"
    slice_path = tmp_path / "slice.svg"
    assert (
        run("rm", "build", "--config", small_config, "--out", rm_path, "--slice-svg", slice_path)
        == 0
    )
    assert rm_path.exists()
    ET.parse(slice_path)
    irm_path = tmp_path / "irm.json"
    assert run("irm", "build", "--rm", rm_path, "--out", irm_path) == 0
    out = capsys.readouterr().out
    assert "voxels" in out and "submaps" in out


def test_irm_query_prints_candidates(tmp_path, small_config, capsys):
    rm_path, irm_path = tmp_path / "rm.json", tmp_path / "irm.json"
    run("rm", "build", "--config", small_config, "--out", rm_path)
    run("irm", "build", "--rm", rm_path, "--out", irm_path)
    capsys.readouterr()  # drop the build chatter
    assert run("irm", "query", "--irm", irm_path, "--pose", "0.5,0.0,0.0,0,0,0") == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["count"] == len(payload["candidates"]) > 0


def test_plan_regions_refine_chain(tmp_path, small_config, straight_traj):
    rm_path, irm_path = tmp_path / "rm.json", tmp_path / "irm.json"
    run("rm", "build", "--config", small_config, "--out", rm_path)
    run("irm", "build", "--rm", rm_path, "--out", irm_path)

    plan_path = tmp_path / "plan.json"
    assert (
        run(
            "plan",
            "--irm", irm_path,
            "--traj", straight_traj,
            "--start", "0,0",
            "--config", small_config,
            "--out", plan_path,
        )
        == 0
    )
    plan = json.loads(plan_path.read_text())
    assert plan["kind"] == "plan" and len(plan["nodes"]) >= 2

    regions_path = tmp_path / "regions.json"
    assert (
        run(
            "regions",
            "--irm", irm_path,
            "--traj", straight_traj,
            "--config", small_config,
            "--out", regions_path,
        )
        == 0
    )
    regions = json.loads(regions_path.read_text())
    assert len(regions["layers"]) == len(plan["nodes"])

    refined_path = tmp_path / "refined.json"
    assert (
        run(
            "refine",
            "--plan", plan_path,
            "--regions", regions_path,
            "--config", small_config,
            "--out", refined_path,
        )
        == 0
    )
    refined = json.loads(refined_path.read_text())
    assert refined["provenance"] == "refined"
    trace = refined["refine"]["cost_trace"]
    # final refine objective never exceeds its value at the discrete path
    assert refined["total_cost"] <= trace[0] + 1e-12


def test_pipeline_artifacts_and_metrics(tmp_path, small_config, straight_traj, capsys):
    out_dir = tmp_path / "out"
    assert (
        run(
            "pipeline",
            "--config", small_config,
            "--traj", straight_traj,
            "--start", "0,0",
            "--out-dir", out_dir,
        )
        == 0
    )
    for name in (
        "rm.json",
        "irm.json",
        "trajectory.json",
        "plan_discrete.json",
        "regions.json",
        "plan_refined.json",
        "plan_result.json",
        "metrics.json",
        "report.csv",
    ):
        assert (out_dir / name).exists(), name
    for svg in ("layered_graph", "region_extraction", "refinement", "cost_trace"):
        p = out_dir / "plots" / f"{svg}.svg"
        assert p.exists()
        ET.parse(p)  # well-formed XML
    metrics = json.loads((out_dir / "metrics.json").read_text())
    assert metrics["refined"]["E_ee_mean"] < 1e-3  # mm
    header = (out_dir / "report.csv").read_text().splitlines()[0]
    assert header.startswith("waypoint,")

    report_path = tmp_path / "report.json"
    assert (
        run("metrics", "--plan", out_dir / "plan_result.json", "--config", small_config, "--out", report_path)
        == 0
    )
    report = json.loads(report_path.read_text())
    assert {"L_b", "S_b", "E_ee_max", "E_ee_mean", "rmse"} <= set(report)


def test_pipeline_deterministic_artifacts(tmp_path, small_config, straight_traj):
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    run("pipeline", "--config", small_config, "--traj", straight_traj, "--start", "0,0", "--out-dir", a_dir)
    run("pipeline", "--config", small_config, "--traj", straight_traj, "--start", "0,0", "--out-dir", b_dir)
    a_files = sorted(p.relative_to(a_dir) for p in a_dir.rglob("*") if p.is_file())
    b_files = sorted(p.relative_to(b_dir) for p in b_dir.rglob("*") if p.is_file())
    assert a_files == b_files
    for rel in a_files:
        assert (a_dir / rel).read_bytes() == (b_dir / rel).read_bytes(), rel


def test_plot_command(tmp_path, small_config, straight_traj):
    out_dir = tmp_path / "plots"
    assert (
        run("plot", "--config", small_config, "--traj", straight_traj, "--start", "0,0", "--out-dir", out_dir)
        == 0
    )
    assert len(list(out_dir.glob("*.svg"))) == 4


def test_csv_trajectory_accepted(tmp_path, small_config):
    csv_path = tmp_path / "traj.csv"
    rows = ["x,y,z,alpha,beta,gamma"] + [f"{0.3 + 0.1 * i},0.0,0.0,0,0,0" for i in range(8)]
    csv_path.write_text("\n".join(rows) + "\n")
    out_dir = tmp_path / "out"
    assert (
        run("pipeline", "--config", small_config, "--traj", csv_path, "--start", "0,0", "--out-dir", out_dir)
        == 0
    )


def test_demo_trajectory_spec(tmp_path, small_config):
    plan_path = tmp_path / "rm.json"
    run("rm", "build", "--config", small_config, "--out", plan_path)
    irm_path = tmp_path / "irm.json"
    run("irm", "build", "--rm", plan_path, "--out", irm_path)
    out = tmp_path / "plan.json"
    code = run(
        "plan",
        "--irm", irm_path,
        "--traj", "demo:capsule",
        "--start", "0,0",
        "--config", small_config,
        "--out", out,
    )
    assert code == 0


def test_unknown_config_key_exits_2(tmp_path, straight_traj, small_config):
    cfg = json.loads(small_config.read_text())
    cfg["dz"] = 0.1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(cfg))
    code = run("pipeline", "--config", bad, "--traj", straight_traj, "--start", "0,0", "--out-dir", tmp_path / "o")
    assert code == 2


def test_malformed_trajectory_exits_2(tmp_path, small_config):
    bad = tmp_path / "bad_traj.json"
    bad.write_text('{"format_version": 1, "kind": "trajectory", "poses": [[0, 0]]}')
    code = run("pipeline", "--config", small_config, "--traj", bad, "--start", "0,0", "--out-dir", tmp_path / "o")
    assert code == 2


def test_bad_csv_header_exits_2(tmp_path, small_config):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,2,3\n")
    code = run("pipeline", "--config", small_config, "--traj", bad, "--start", "0,0", "--out-dir", tmp_path / "o")
    assert code == 2


def test_unreachable_waypoint_exits_3_and_names_index(tmp_path, small_config, capsys):
    traj = tmp_path / "high.json"
    traj.write_text(
        json.dumps(
            {
                "format_version": 1,
                "kind": "trajectory",
                "poses": [[0.3, 0, 5.0, 0, 0, 0], [0.6, 0, 5.0, 0, 0, 0]],
            }
        )
    )
    code = run("pipeline", "--config", small_config, "--traj", traj, "--start", "0,0", "--out-dir", tmp_path / "o")
    assert code == 3
    assert "waypoint 0" in capsys.readouterr().err


def test_bad_pose_string_exits_2(tmp_path, small_config):
    rm_path = tmp_path / "rm.json"
    run("rm", "build", "--config", small_config, "--out", rm_path)
    irm_path = tmp_path / "irm.json"
    run("irm", "build", "--rm", rm_path, "--out", irm_path)
    assert run("irm", "query", "--irm", irm_path, "--pose", "1,2,3") == 2
