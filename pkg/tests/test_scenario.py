import textwrap

import pytest

from aggwave.errors import ScenarioError
from aggwave.scenario import ScenarioSpec, expand_document, load_scenarios, scenario_from_dict

BASE = dict(id="s", components=["bumps", "doppler"], M=64, N=20, snr=3, estimator="identity")


def test_minimal_defaults():
    spec = scenario_from_dict(BASE)
    assert spec.L == 2 and spec.replications == 25 and spec.component_sd == 7.0
    assert spec.noise.family == "normal" and spec.noise.snr_reference == "innovation"
    assert spec.plan().M == 64 and spec.plan().filter == "db8" and spec.plan().J0 == 3


@pytest.mark.parametrize(
    "change, field",
    [
        ({"colour": 1}, "colour"),
        ({"noise": {"family": "ar1", "phii": 0.5}}, "noise.phii"),
        ({"sampler": {"iters": 10}}, "sampler.iters"),
        ({"components": ["bumps", "spikes"]}, "components"),
        ({"estimator": "lasso"}, "estimator"),
        ({"M": 100}, "M"),
        ({"M": "64"}, "M"),
        ({"replications": 0}, "replications"),
        ({"noise": {"family": "ar1"}}, "noise.phi"),
        ({"wavelet": {"filter": "coif2"}}, "wavelet.filter"),
    ],
)
def test_errors_name_the_field(change, field):
    with pytest.raises(ScenarioError, match=field.replace(".", r"\.")):
        scenario_from_dict({**BASE, **change})


def test_missing_required_field():
    raw = dict(BASE)
    del raw["snr"]
    with pytest.raises(ScenarioError, match="snr"):
        scenario_from_dict(raw)


def test_sweep_expansion_and_ids():
    doc = {**BASE, "sweep": {"snr": [3, 7], "noise": [{"family": "normal"}, {"family": "ar1", "phi": 0.5}]}}
    specs = expand_document(doc)
    assert [s.id for s in specs] == ["s-snr3-normal", "s-snr3-ar1-0.5", "s-snr7-normal", "s-snr7-ar1-0.5"]
    assert specs[1].noise.phi == 0.5 and specs[2].snr == 7


def test_sweep_over_component_lists():
    doc = {**BASE, "sweep": {"components": [["bumps", "doppler"], ["bumps", "blocks", "doppler", "heavisine"]]}}
    specs = expand_document(doc)
    assert [s.L for s in specs] == [2, 4] and [s.id for s in specs] == ["s-L2", "s-L4"]


def test_full_scale_overrides():
    doc = {**BASE, "paper_scale": {"replications": 400, "sampler.iterations": 50000}}
    desk, = expand_document(doc)
    full, = expand_document(doc, paper_scale=True)
    assert desk.replications == 25 and desk.sampler.iterations == 5000
    assert full.replications == 400 and full.sampler.iterations == 50000


def test_digest_is_canonical():
    a = scenario_from_dict(BASE)
    b = scenario_from_dict(dict(reversed(list(BASE.items()))))
    assert a.digest() == b.digest()
    assert a.digest() != a.replace(seed=1).digest()


def test_data_fields_ignore_estimator():
    a = scenario_from_dict(BASE)
    b = a.replace(estimator="universal-threshold", id="other")
    assert a.data_fields() == b.data_fields()
    assert a.data_fields() != a.replace(snr=4).data_fields()


def test_load_yaml(tmp_path):
    path = tmp_path / "s.yaml"
    path.write_text(textwrap.dedent("""
        id: g
        description: free text is allowed
        components: [bumps]
        M: 32
        N: 10
        snr: 7
        estimator: gamma-bayes
        noise: {family: gamma, shape: 3.0}
        prior: {p: 0.75, tau: 5}
        sweep:
          M: [32, 64]
    """))
    specs = load_scenarios(path)
    assert [s.M for s in specs] == [32, 64]
    assert specs[0].noise.shape == 3.0 and specs[0].prior.config().p == 0.75


def test_load_yaml_syntax_error(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("id: [unclosed\n")
    with pytest.raises(ScenarioError, match="YAML"):
        load_scenarios(path)


def test_spec_is_hashable_value():
    spec = scenario_from_dict(BASE)
    assert isinstance(spec, ScenarioSpec)
    assert spec == scenario_from_dict(BASE)
