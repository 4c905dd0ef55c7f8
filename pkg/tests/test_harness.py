"""Tests for the experiment harness: config grammar, oracle realization,
point loading, CSV artifacts, and batch execution."""

import os

import numpy as np
import pytest

from lhsattack.attack import COMPLETED, AttackTrace, TraceRow
from lhsattack.errors import ConfigError
from lhsattack.harness import (
    ExperimentConfig,
    OracleSpecConfig,
    RunRecord,
    SummaryRow,
    build_oracle,
    distortion_at_budget,
    emit_summary_csv,
    emit_trace_csv,
    generate_points,
    load_points_file,
    parse_config,
    run_experiment,
    serialize_config,
)
from lhsattack.oracles import (
    HalfspaceOracle,
    HypersphereOracle,
    MlpOracle,
    QueryLedger,
    TARGETED,
)

from reference import parse_summary_csv, parse_trace_csv


def write_config(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------------------
# Config parsing: round trips


FULL_CONFIG = """\
[experiment]
name = full
repetitions = 2
base_seed = 11
output_dir = artifacts
budgets = 500 2000
samplers = lhs srs
statistics = median mean

[oracle plane]
kind = halfspace
normal = 1 -2 0.5
offset = -0.25

[oracle ball]
kind = hypersphere
radius = 0.75
center = 0.9 0.1 0.4

[oracle net]
kind = mlp
weights = model.txt
target_class = 1

[oracle probe]
kind = external
cmd = python3 stub.py --flag value
timeout = 3.5
dim = 3

[points]
source = inline
values =
    0.2 0.3 0.4
    0.6 0.5 0.1

[attack]
initial_samples = 24
iterations = 12
bisect_tol = 0.001
max_queries = 4000
max_init_tries = 50
max_step_retries = 7
clip_low = -1
clip_high = 2
"""


def test_parse_full_config_fields(tmp_path):
    config = parse_config(write_config(tmp_path, FULL_CONFIG))
    assert config.name == "full"
    assert config.repetitions == 2
    assert config.base_seed == 11
    assert config.output_dir == "artifacts"
    assert config.budgets == [500, 2000]
    assert config.samplers == ["lhs", "srs"]
    assert config.statistics == ["median", "mean"]
    assert [o.name for o in config.oracles] == ["plane", "ball", "net", "probe"]
    plane, ball, net, probe = config.oracles
    assert np.array_equal(plane.normal, [1.0, -2.0, 0.5]) and plane.offset == -0.25
    assert ball.radius == 0.75 and np.array_equal(ball.center, [0.9, 0.1, 0.4])
    assert net.weights == "model.txt" and net.target_class == 1
    assert probe.cmd == "python3 stub.py --flag value"
    assert probe.timeout == 3.5 and probe.dim == 3
    assert config.points.source == "inline"
    assert config.points.values.shape == (2, 3)
    assert config.points.count == 2 and config.points.dim == 3
    assert np.array_equal(config.points.values[1], [0.6, 0.5, 0.1])
    a = config.attack
    assert (a.initial_samples, a.iterations) == (24, 12)
    assert a.bisect_tol == 0.001 and a.max_queries == 4000
    assert (a.max_init_tries, a.max_step_retries) == (50, 7)
    assert (a.clip_low, a.clip_high) == (-1.0, 2.0)


def test_serialize_parse_roundtrip_all_oracle_kinds(tmp_path):
    config = parse_config(write_config(tmp_path, FULL_CONFIG))
    text = serialize_config(config)
    config2 = parse_config(write_config(tmp_path, text, "round.cfg"))
    assert config2 == config
    # serialization is a fixpoint after one round
    assert serialize_config(config2) == text


def test_roundtrip_generate_points(tmp_path):
    text = """\
[oracle ball]
kind = hypersphere
radius = 0.5

[points]
source = generate
count = 4
dim = 6
seed = 9
"""
    config = parse_config(write_config(tmp_path, text))
    assert (config.points.count, config.points.dim, config.points.seed) == (4, 6, 9)
    config2 = parse_config(write_config(tmp_path, serialize_config(config), "r.cfg"))
    assert config2 == config


def test_roundtrip_file_points(tmp_path):
    text = """\
[oracle ball]
kind = hypersphere
radius = 0.5

[points]
source = file
file = pts.txt
seed = 3
"""
    config = parse_config(write_config(tmp_path, text))
    assert config.points.file == "pts.txt"
    config2 = parse_config(write_config(tmp_path, serialize_config(config), "r.cfg"))
    assert config2 == config


def test_parse_defaults_without_experiment_section(tmp_path):
    text = """\
[oracle ball]
kind = hypersphere
radius = 0.5

[points]
source = inline
values = 0.5 0.5
"""
    config = parse_config(write_config(tmp_path, text))
    assert config.name == "experiment"
    assert config.repetitions == 1 and config.base_seed == 0
    assert config.output_dir == "out"
    assert config.budgets == [1000, 5000, 20000]
    assert config.samplers == ["lhs", "srs"]
    assert config.statistics == ["mean", "median"]
    assert config.attack.initial_samples == 100
    assert config.attack.iterations == 64
    # single-line inline values still become one 2-d row
    assert config.points.values.shape == (1, 2)


def test_parse_key_aliases_match_canonical_spellings(tmp_path):
    aliased = """\
[oracle plane]
kind = halfspace
w = 1 0
b = -0.5

[oracle ball]
kind = hypersphere
r = 0.75

[oracle net]
kind = mlp
weights = model.txt
target = 1
class = 0

[oracle probe]
kind = external
cmd = run-me
m = 2

[points]
source = inline
values = 0.2 0.2
"""
    canonical = """\
[oracle plane]
kind = halfspace
normal = 1 0
offset = -0.5

[oracle ball]
kind = hypersphere
radius = 0.75

[oracle net]
kind = mlp
weights = model.txt
target_class = 1
original_class = 0

[oracle probe]
kind = external
cmd = run-me
dim = 2

[points]
source = inline
values = 0.2 0.2
"""
    a = parse_config(write_config(tmp_path, aliased, "a.cfg"))
    b = parse_config(write_config(tmp_path, canonical, "b.cfg"))
    assert a.oracles == b.oracles


def test_parse_list_keys_accept_commas_and_whitespace(tmp_path):
    commas = """\
[experiment]
budgets = 1000, 5000,20000
samplers = lhs,srs
statistics = median, mean

[oracle ball]
kind = hypersphere
radius = 0.5

[points]
source = inline
values = 0.5 0.5
"""
    spaces = commas.replace(",", " ")
    a = parse_config(write_config(tmp_path, commas, "a.cfg"))
    b = parse_config(write_config(tmp_path, spaces, "b.cfg"))
    assert a.budgets == b.budgets == [1000, 5000, 20000]
    assert a.samplers == b.samplers == ["lhs", "srs"]
    assert a.statistics == b.statistics == ["median", "mean"]


# ---------------------------------------------------------------------------
# Config parsing: rejection surface


MINIMAL_TAIL = """
[oracle ball]
kind = hypersphere
radius = 0.5

[points]
source = inline
values = 0.5 0.5
"""


def _expect_config_error(tmp_path, text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(write_config(tmp_path, text, "bad.cfg"))


def test_parse_rejects_unknown_section(tmp_path):
    _expect_config_error(tmp_path, "[frobnicator]\nx = 1\n" + MINIMAL_TAIL,
                         r"unknown section")


def test_parse_rejects_unknown_experiment_key(tmp_path):
    _expect_config_error(tmp_path, "[experiment]\nbogus = 1\n" + MINIMAL_TAIL,
                         r"unknown key 'bogus'")


def test_parse_rejects_unknown_oracle_key(tmp_path):
    text = MINIMAL_TAIL.replace("radius = 0.5", "radius = 0.5\nshape = round")
    _expect_config_error(tmp_path, text, r"unknown key 'shape'")


def test_parse_rejects_unknown_points_key(tmp_path):
    text = MINIMAL_TAIL.replace("source = inline", "source = inline\nstyle = x")
    _expect_config_error(tmp_path, text, r"unknown key 'style'")


def test_parse_rejects_unknown_attack_key(tmp_path):
    _expect_config_error(tmp_path, MINIMAL_TAIL + "\n[attack]\nspeed = 9\n",
                         r"unknown key 'speed'")


def test_parse_requires_points_section(tmp_path):
    _expect_config_error(
        tmp_path, "[oracle ball]\nkind = hypersphere\nradius = 0.5\n",
        r"\[points\] section is required")


def test_parse_requires_an_oracle_section(tmp_path):
    _expect_config_error(tmp_path, "[points]\nsource = inline\nvalues = 0.5\n",
                         r"at least one \[oracle")


def test_parse_rejects_zero_repetitions(tmp_path):
    _expect_config_error(tmp_path,
                         "[experiment]\nrepetitions = 0\n" + MINIMAL_TAIL,
                         r"repetitions must be >= 1")


def test_parse_rejects_nonpositive_budget(tmp_path):
    _expect_config_error(tmp_path, "[experiment]\nbudgets = 0 100\n" + MINIMAL_TAIL,
                         r"budgets must be positive")


def test_parse_rejects_non_integer_budget(tmp_path):
    _expect_config_error(tmp_path, "[experiment]\nbudgets = ten\n" + MINIMAL_TAIL,
                         r"budgets")


def test_parse_rejects_unknown_sampler_name(tmp_path):
    _expect_config_error(tmp_path, "[experiment]\nsamplers = lhs qmc\n" + MINIMAL_TAIL,
                         r"samplers must be drawn")


def test_parse_rejects_unknown_statistic(tmp_path):
    _expect_config_error(tmp_path, "[experiment]\nstatistics = mode\n" + MINIMAL_TAIL,
                         r"statistics must be drawn")


def test_parse_rejects_targeted_mode(tmp_path):
    _expect_config_error(tmp_path, MINIMAL_TAIL + "\n[attack]\nmode = targeted\n",
                         r"untargeted")


def test_parse_rejects_duplicate_oracle_names(tmp_path):
    text = "[oracle a]\nkind = hypersphere\nradius = 0.5\n" \
           "[oracle a ]\nkind = hypersphere\nradius = 0.25\n" \
           "[points]\nsource = inline\nvalues = 0.5 0.5\n"
    _expect_config_error(tmp_path, text, r"unique")


@pytest.mark.parametrize("oracle_section,match", [
    ("kind = hologram\n", r"unknown oracle kind"),
    ("kind = hypersphere\nradius = 0\n", r"radius must be positive"),
    ("kind = halfspace\nnormal = 1 0\n", r"needs normal and offset"),
    ("kind = halfspace\nnormal = 0 0\noffset = 1\n", r"nonzero"),
    ("kind = mlp\n", r"needs a weights path"),
    ("kind = external\n", r"needs a command"),
])
def test_parse_rejects_bad_oracle_sections(tmp_path, oracle_section, match):
    text = "[oracle x]\n" + oracle_section + \
           "[points]\nsource = inline\nvalues = 0.5 0.5\n"
    _expect_config_error(tmp_path, text, match)


@pytest.mark.parametrize("points_section,match", [
    ("source = telepathy\n", r"unknown points source"),
    ("source = inline\n", r"needs values"),
    ("source = generate\ndim = 3\n", r"generate needs count"),
    ("source = file\n", r"needs a file path"),
])
def test_parse_rejects_bad_points_sections(tmp_path, points_section, match):
    text = "[oracle ball]\nkind = hypersphere\nradius = 0.5\n" \
           "[points]\n" + points_section
    _expect_config_error(tmp_path, text, match)


def test_parse_rejects_halfspace_dimension_mismatch(tmp_path):
    text = "[oracle plane]\nkind = halfspace\nnormal = 1 0\noffset = -0.5\n" \
           "[points]\nsource = inline\nvalues = 0.5 0.5 0.5\n"
    _expect_config_error(tmp_path, text, r"coordinates but points have dimension 3")


def test_parse_rejects_oracle_dim_conflict(tmp_path):
    text = "[oracle probe]\nkind = external\ncmd = run-me\ndim = 5\n" \
           "[points]\nsource = inline\nvalues = 0.5 0.5 0.5\n"
    _expect_config_error(tmp_path, text, r"dim=5 conflicts with points dimension 3")


def test_parse_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError, match=r"cannot read config"):
        parse_config(str(tmp_path / "nope.cfg"))


def test_parse_malformed_ini_is_config_error(tmp_path):
    _expect_config_error(tmp_path, "orphan = 1\n", r"malformed config")


# ---------------------------------------------------------------------------
# Oracle realization


def test_build_oracle_hypersphere_centers_on_original():
    spec = OracleSpecConfig(name="ball", kind="hypersphere", radius=0.5)
    x = np.array([0.2, 0.4, 0.6])
    oracle = build_oracle(spec, x)
    assert isinstance(oracle, HypersphereOracle)
    assert np.array_equal(oracle.original, x)
    assert oracle.radius == 0.5


def test_build_oracle_hypersphere_honors_explicit_center():
    center = np.array([0.9, 0.1, 0.4])
    spec = OracleSpecConfig(name="ball", kind="hypersphere", radius=0.5,
                            center=center)
    oracle = build_oracle(spec, np.array([0.2, 0.4, 0.6]))
    assert np.array_equal(oracle.original, center)


def test_build_oracle_center_dimension_mismatch():
    spec = OracleSpecConfig(name="ball", kind="hypersphere", radius=0.5,
                            center=np.array([0.9, 0.1]))
    with pytest.raises(ConfigError, match=r"center/point dimension"):
        build_oracle(spec, np.array([0.2, 0.4, 0.6]))


def test_build_oracle_halfspace():
    spec = OracleSpecConfig(name="plane", kind="halfspace",
                            normal=np.array([3.0, 4.0]), offset=-2.0)
    x = np.array([0.1, 0.1])
    oracle = build_oracle(spec, x)
    assert isinstance(oracle, HalfspaceOracle)
    assert oracle.offset == -2.0
    assert np.array_equal(oracle.original, x)


def test_build_oracle_halfspace_dimension_mismatch():
    spec = OracleSpecConfig(name="plane", kind="halfspace",
                            normal=np.array([1.0, 0.0]), offset=0.0)
    with pytest.raises(ConfigError, match=r"normal/point dimension"):
        build_oracle(spec, np.array([0.2, 0.4, 0.6]))


def test_build_oracle_mlp_uses_model_cache(mlp_fixture_path):
    spec = OracleSpecConfig(name="net", kind="mlp", weights=mlp_fixture_path)
    x = np.full(64, 0.5)
    cache = {}
    o1 = build_oracle(spec, x, cache)
    o2 = build_oracle(spec, x, cache)
    assert isinstance(o1, MlpOracle)
    assert o1.model is o2.model
    # a fresh cache (or none) loads an independent copy
    o3 = build_oracle(spec, x)
    assert o3.model is not o1.model
    assert o1.original_class in (0, 1)


def test_build_oracle_mlp_targeted_when_target_class_given(mlp_fixture_path):
    spec = OracleSpecConfig(name="net", kind="mlp", weights=mlp_fixture_path,
                            target_class=1)
    oracle = build_oracle(spec, np.full(64, 0.5))
    assert oracle.mode == TARGETED
    assert oracle.target_class == 1


def test_build_oracle_external_dim_mismatch_before_launch():
    spec = OracleSpecConfig(name="probe", kind="external", cmd="run-me", dim=5)
    with pytest.raises(ConfigError, match=r"dim=5"):
        build_oracle(spec, np.array([0.2, 0.4, 0.6]))


# ---------------------------------------------------------------------------
# Point loading and generation


def test_load_points_file_skips_blank_lines(tmp_path):
    path = tmp_path / "pts.txt"
    path.write_text("0.5 0.25\n\n1 2\n")
    points = load_points_file(str(path))
    assert points.shape == (2, 2)
    assert np.array_equal(points, [[0.5, 0.25], [1.0, 2.0]])


def test_load_points_file_reports_line_number(tmp_path):
    path = tmp_path / "pts.txt"
    path.write_text("0.5 0.25\n\n1 2\n0.1 nope\n")
    with pytest.raises(ConfigError, match=r"pts\.txt:4:"):
        load_points_file(str(path))


def test_load_points_file_rejects_empty(tmp_path):
    path = tmp_path / "pts.txt"
    path.write_text("\n\n")
    with pytest.raises(ConfigError, match=r"is empty"):
        load_points_file(str(path))


def test_generate_points_shape_bounds_and_determinism():
    a = generate_points(5, 7, seed=3, lo=0.2, hi=0.8)
    b = generate_points(5, 7, seed=3, lo=0.2, hi=0.8)
    c = generate_points(5, 7, seed=4, lo=0.2, hi=0.8)
    assert a.shape == (5, 7)
    assert np.all(a >= 0.2) and np.all(a <= 0.8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_generate_points_rejection_sampling_honors_predicate():
    points = generate_points(8, 3, seed=0, accept=lambda p: p[0] > 0.7)
    assert np.all(points[:, 0] > 0.7)


def test_generate_points_gives_up_on_impossible_predicate():
    with pytest.raises(ConfigError, match=r"could not generate"):
        generate_points(1, 3, seed=0, accept=lambda p: False, max_tries=5)


# ---------------------------------------------------------------------------
# CSV emission


def _trace_row(queries, distortion, **kw):
    base = dict(t=0, n_samples=0, probe_step=0.0, step_size=0.0,
                queries=queries, distortion=distortion, agree_count=0,
                step_retries=0, bisect_steps=0)
    base.update(kw)
    return TraceRow(**base)


def test_emit_trace_csv_empty_trace(tmp_path):
    path = tmp_path / "trace.csv"
    emit_trace_csv(AttackTrace(rows=[], status=COMPLETED, ledger=QueryLedger()),
                   str(path))
    expected_header = ("t,M_t,delta_t,epsilon_t,queries,distortion,"
                       "agree_count,step_retries,binsearch_steps")
    assert path.read_text() == expected_header + "\n# status=completed\n"
    rows, status = parse_trace_csv(str(path))
    assert rows == [] and status == "completed"


def test_emit_trace_csv_roundtrips_awkward_floats(tmp_path):
    rows = [
        _trace_row(123, 5e-324, t=0, n_samples=100, probe_step=0.1,
                   step_size=2.0 / 3.0, agree_count=60, bisect_steps=9),
        _trace_row(456, 1.0 / 3.0, t=1, n_samples=114, probe_step=1e308,
                   step_size=0.0, agree_count=57, step_retries=2,
                   bisect_steps=9),
    ]
    path = tmp_path / "trace.csv"
    emit_trace_csv(AttackTrace(rows=rows, status="budget_exhausted",
                               ledger=QueryLedger()), str(path))
    parsed, status = parse_trace_csv(str(path))
    assert status == "budget_exhausted"
    assert len(parsed) == 2
    for row, expect in zip(parsed, rows):
        for name in ("t", "n_samples", "probe_step", "step_size", "queries",
                     "distortion", "agree_count", "step_retries",
                     "bisect_steps"):
            assert row[name] == getattr(expect, name)


def test_emit_summary_csv_rows_and_failure_comments(tmp_path):
    rows = [SummaryRow(oracle="ball", sampler="lhs", budget=1000,
                       statistic="median", distortion=0.125, repetitions=50)]
    failures = [RunRecord(oracle="ball", sampler="srs", point_index=3, rep=7,
                          seed=0, trace_path="", status="init_failed",
                          error="boom")]
    path = tmp_path / "summary.csv"
    emit_summary_csv(rows, str(path), failures)
    text = path.read_text().splitlines()
    assert text[0] == "oracle,sampler,budget,statistic,distortion,repetitions"
    assert text[1] == "ball,lhs,1000,median,0.125,50"
    assert text[2] == "# failed oracle=ball sampler=srs point=3 rep=7 status=init_failed"
    parsed, comments = parse_summary_csv(str(path))
    assert parsed == [{"oracle": "ball", "sampler": "lhs", "budget": 1000,
                       "statistic": "median", "distortion": 0.125,
                       "repetitions": 50}]
    assert len(comments) == 1


def test_distortion_at_budget_takes_best_within_prefix():
    trace = AttackTrace(rows=[_trace_row(120, 0.9), _trace_row(300, 0.4),
                              _trace_row(800, 0.6)],
                        status=COMPLETED, ledger=QueryLedger())
    assert distortion_at_budget(trace, 1000) == 0.4
    assert distortion_at_budget(trace, 800) == 0.4
    assert distortion_at_budget(trace, 500) == 0.4
    assert distortion_at_budget(trace, 299) == 0.9
    assert distortion_at_budget(trace, 119) is None


# ---------------------------------------------------------------------------
# Experiment execution


GRID_CONFIG = """\
[experiment]
name = grid
repetitions = 2
base_seed = 5
budgets = 300 800
samplers = lhs srs
statistics = mean median

[oracle sph]
kind = hypersphere
radius = 0.25

[points]
source = inline
values =
    0.5 0.5 0.5 0.5 0.5
    0.4 0.6 0.5 0.45 0.55

[attack]
initial_samples = 10
iterations = 8
"""


@pytest.fixture(scope="module")
def grid_result(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("grid")
    config = parse_config(write_config(tmp, GRID_CONFIG))
    out = tmp / "out"
    return config, run_experiment(config, output_dir=str(out)), out


def test_run_experiment_writes_one_trace_per_cell(grid_result):
    _, result, out = grid_result
    assert len(result.runs) == 8
    assert all(r.status == COMPLETED and r.error is None for r in result.runs)
    assert len(result.traces) == 8
    for sampler in ("lhs", "srs"):
        for pi in (0, 1):
            for rep in (0, 1):
                name = f"trace_sph_{sampler}_pt{pi:03d}_rep{rep:03d}.csv"
                assert (out / name).exists()
                assert ("sph", sampler, pi, rep) in result.traces
                rows, status = parse_trace_csv(str(out / name))
                assert status == "completed"
                assert rows and rows[-1]["queries"] <= 800


def test_run_experiment_pairs_sampler_seeds(grid_result):
    _, result, _ = grid_result
    seeds = {}
    for rec in result.runs:
        seeds.setdefault((rec.point_index, rec.rep), set()).add(rec.seed)
    # same (point, rep) cell -> identical seed across samplers ...
    assert all(len(s) == 1 for s in seeds.values())
    # ... and distinct cells draw distinct seeds
    assert len({s.pop() for s in seeds.values()}) == 4


def test_run_experiment_summary_cardinality_and_counts(grid_result):
    _, result, _ = grid_result
    rows = result.summary_rows
    assert len(rows) == 8  # 2 samplers x 2 budgets x 2 statistics
    assert {(r.sampler, r.budget, r.statistic) for r in rows} == {
        (s, b, st) for s in ("lhs", "srs") for b in (300, 800)
        for st in ("mean", "median")}
    assert all(r.oracle == "sph" for r in rows)
    assert all(r.repetitions == 4 for r in rows)  # 2 points x 2 reps


def test_run_experiment_distortion_never_worsens_with_budget(grid_result):
    _, result, _ = grid_result
    by = {(r.sampler, r.statistic, r.budget): r.distortion
          for r in result.summary_rows}
    for sampler in ("lhs", "srs"):
        for stat in ("mean", "median"):
            assert by[(sampler, stat, 800)] <= by[(sampler, stat, 300)]


def test_run_experiment_summary_recomputes_from_traces(grid_result):
    _, result, _ = grid_result
    for row in result.summary_rows:
        values = []
        for (oname, sampler, _pi, _rep), trace in result.traces.items():
            if oname == row.oracle and sampler == row.sampler:
                d = distortion_at_budget(trace, row.budget)
                if d is not None:
                    values.append(d)
        expected = float(np.mean(values)) if row.statistic == "mean" \
            else float(np.median(values))
        assert row.distortion == expected
        assert row.repetitions == len(values)


def test_run_experiment_summary_file_matches_rows(grid_result):
    _, result, _ = grid_result
    parsed, comments = parse_summary_csv(result.summary_path)
    assert comments == []
    assert len(parsed) == len(result.summary_rows)
    for got, row in zip(parsed, result.summary_rows):
        assert got["oracle"] == row.oracle
        assert got["sampler"] == row.sampler
        assert got["budget"] == row.budget
        assert got["statistic"] == row.statistic
        assert got["distortion"] == row.distortion
        assert got["repetitions"] == row.repetitions


def test_run_experiment_is_deterministic(grid_result, tmp_path):
    config, _, out = grid_result
    rerun = run_experiment(config, output_dir=str(tmp_path / "out2"))
    with open(result_path := os.path.join(str(out), "summary.csv"), "rb") as fh:
        first = fh.read()
    with open(rerun.summary_path, "rb") as fh:
        assert fh.read() == first, result_path
    name = "trace_sph_lhs_pt001_rep001.csv"
    assert (tmp_path / "out2" / name).read_bytes() == (out / name).read_bytes()


def test_run_experiment_records_failures_and_continues(tmp_path):
    text = """\
[experiment]
repetitions = 2
budgets = 400
samplers = lhs srs
statistics = median

[oracle ball]
kind = hypersphere
radius = 0.2
center = 0.5 0.5 0.5

[points]
source = inline
values =
    0.5 0.5 0.5
    0.95 0.95 0.95

[attack]
initial_samples = 8
iterations = 6
"""
    config = parse_config(write_config(tmp_path, text))
    result = run_experiment(config, output_dir=str(tmp_path / "out"))
    assert len(result.runs) == 8
    bad = [r for r in result.runs if r.point_index == 1]
    good = [r for r in result.runs if r.point_index == 0]
    assert len(bad) == 4
    assert all(r.status == "init_failed" for r in bad)
    assert all(r.error == "original point is already adversarial" for r in bad)
    assert all(r.trace_path == "" for r in bad)
    assert all(r.status == COMPLETED and r.error is None for r in good)
    # the failed point contributes no traces and no statistics
    assert len(result.traces) == 4
    assert all(key[2] == 0 for key in result.traces)
    assert all(r.repetitions == 2 for r in result.summary_rows)
    parsed, comments = parse_summary_csv(result.summary_path)
    assert len(parsed) == 2  # 2 samplers x 1 budget x 1 statistic
    assert len(comments) == 4
    assert all("point=1" in c and "status=init_failed" in c for c in comments)


def test_run_experiment_skips_budgets_below_first_record(tmp_path):
    text = """\
[experiment]
budgets = 1 400
statistics = median

[oracle ball]
kind = hypersphere
radius = 0.25

[points]
source = inline
values = 0.5 0.5 0.5

[attack]
initial_samples = 8
iterations = 6
"""
    config = parse_config(write_config(tmp_path, text))
    result = run_experiment(config, output_dir=str(tmp_path / "out"))
    # no run records a point within one query, so budget 1 yields no row
    assert {r.budget for r in result.summary_rows} == {400}
    assert len(result.summary_rows) == 2  # 2 samplers x 1 budget x 1 stat


def test_run_experiment_generate_source_filters_originals(tmp_path):
    text = """\
[experiment]
budgets = 200
statistics = median

[oracle plane]
kind = halfspace
normal = 1 1 1 1
offset = -2

[points]
source = generate
count = 3
dim = 4
seed = 17

[attack]
initial_samples = 6
iterations = 4
"""
    config = parse_config(write_config(tmp_path, text))
    result = run_experiment(config, output_dir=str(tmp_path / "out"))
    # rejection sampling only keeps originals the oracle answers -1 on,
    # so every run must get past initialization
    assert len(result.runs) == 6
    assert all(r.status == COMPLETED for r in result.runs)
    assert len(result.traces) == 6


def test_run_experiment_file_source(tmp_path):
    pts = tmp_path / "pts.txt"
    pts.write_text("0.5 0.5 0.5\n")
    text = f"""\
[experiment]
budgets = 200
statistics = median

[oracle ball]
kind = hypersphere
radius = 0.3

[points]
source = file
file = {pts}

[attack]
initial_samples = 6
iterations = 4
"""
    config = parse_config(write_config(tmp_path, text))
    result = run_experiment(config, output_dir=str(tmp_path / "out"))
    assert len(result.runs) == 2
    assert all(r.status == COMPLETED for r in result.runs)


# ---------------------------------------------------------------------------
# Paired benchmark: stratified vs plain sampling on an offset boundary

# The ball's center is displaced from the attacked point, so the nearest
# adversarial point (distortion 0.15 = radius - offset) must be found by
# walking the boundary rather than by the initial bisection alone.


def test_paired_benchmark_offset_sphere_median_dominance(tmp_path):
    center = " ".join(["0.8"] + ["0.5"] * 19)
    origin = " ".join(["0.5"] * 20)
    text = f"""\
[experiment]
name = paired
repetitions = 50
base_seed = 0
budgets = 1000 5000 20000
samplers = lhs srs
statistics = median

[oracle sphere]
kind = hypersphere
radius = 0.45
center = {center}

[points]
source = inline
values = {origin}

[attack]
initial_samples = 100
iterations = 64
"""
    config = parse_config(write_config(tmp_path, text))
    result = run_experiment(config, output_dir=str(tmp_path / "out"))
    assert all(r.status == COMPLETED for r in result.runs)
    by = {(r.sampler, r.budget): r.distortion for r in result.summary_rows}
    for budget in (1000, 5000, 20000):
        lhs_med, srs_med = by[("lhs", budget)], by[("srs", budget)]
        # no adversarial point sits closer than radius minus center offset
        assert lhs_med >= 0.15 - 1e-9
        assert srs_med >= 0.15 - 1e-9
        # stratified probes track plain probes' seed, then do no worse
        assert lhs_med <= srs_med
    for sampler in ("lhs", "srs"):
        assert by[(sampler, 20000)] <= by[(sampler, 5000)] <= by[(sampler, 1000)]
        assert by[(sampler, 20000)] < 0.16
