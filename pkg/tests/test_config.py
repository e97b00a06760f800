import math

from hypothesis import given, settings, strategies as st
import pytest

from deepmso import config as cf
from deepmso.errors import ConfigurationError, ParseError
from deepmso.sim import SimConfig


def test_empty_file_gives_defaults():
    cfg = cf.parse_text("")
    assert cfg == SimConfig()
    assert cfg.madam.eta_star == pytest.approx(0.1)


def test_eta_override_scales_eta_star_only():
    cfg = cf.parse_text("[madam]\neta = 0.0005\n")
    assert cfg.madam.eta == 0.0005
    assert cfg.madam.eta_star == pytest.approx(0.05)
    base = SimConfig()
    assert (cfg.madam.sigma_star, cfg.madam.beta) == (base.madam.sigma_star, base.madam.beta)
    assert (cfg.plant, cfg.controller, cfg.observer, cfg.network) == (
        base.plant, base.controller, base.observer, base.network)


def test_explicit_eta_star_wins():
    assert cf.parse_text("[madam]\neta = 0.0005\neta_star = 0.3\n").madam.eta_star == 0.3


def test_unknown_key_names_key_and_line():
    with pytest.raises(ParseError) as info:
        cf.parse_text("[madam]\nettaa = 0.001\n")
    assert "ettaa" in str(info.value)
    assert info.value.line == 2
    assert str(info.value).startswith("line 2:")


def test_unknown_section_reported():
    with pytest.raises(ParseError, match="unknown section"):
        cf.parse_text("[sim]\ndt = 0.001\n\n[solver]\nx = 1\n")


def test_duplicate_key_rejected():
    with pytest.raises(ParseError, match="duplicate key"):
        cf.parse_text("[sim]\ndt = 0.001\ndt = 0.002\n")


def test_key_outside_section():
    with pytest.raises(ParseError):
        cf.parse_text("dt = 0.001\n")


@pytest.mark.parametrize("text", [
    "[sim]\ndt = fast\n",
    "[sim]\nnn = maybe\n",
    "[sim]\nx0 = 1, 2\n",
    "[sim]\ndt = nan\n",
    "[sim]\ndt = -1\n",
    "[controller]\nk = 1, 1, 1, -1\n",
    "[network]\nhidden = 20, 0\n",
    "[observer]\nfeedback = backwards\n",
    "[madam]\nbeta = 1.5\n",
])
def test_malformed_values_rejected(text):
    with pytest.raises(ConfigurationError):
        cf.parse_text(text)


def test_bad_value_reports_line():
    with pytest.raises(ParseError) as info:
        cf.parse_text("# header\n[sim]\nseed = 3\ndt = fast\n")
    assert info.value.line == 4


def test_comments_and_case():
    cfg = cf.parse_text("[SIM]\nNN = off   # baseline\nx_hat0 = none\n[controller]\ntorque_limit = 50, 40\n")
    assert cfg.nn is False and cfg.x_hat0 is None
    assert cfg.controller.torque_limit == (50.0, 40.0)


def test_observer_lambda_maps_to_error_scale():
    assert cf.parse_text("[observer]\nlambda = 1, 1, 2, 2\n").observer.error_scale == (1.0, 1.0, 2.0, 2.0)


def test_resolve_key(monkeypatch):
    assert cf.resolve_key("eta") == ("madam", "eta")
    assert cf.resolve_key("sim.seed") == ("sim", "seed")
    schema = {s: dict(keys) for s, keys in cf.SCHEMA.items()}
    schema["sim"]["eta"] = schema["madam"]["eta"]
    monkeypatch.setattr(cf, "SCHEMA", schema)
    with pytest.raises(ConfigurationError, match="ambiguous"):
        cf.resolve_key("eta")
    assert cf.resolve_key("madam.eta") == ("madam", "eta")
    with pytest.raises(ConfigurationError, match="unknown"):
        cf.resolve_key("nope")
    with pytest.raises(ConfigurationError):
        cf.resolve_key("madam.nope")


def test_overrides_do_not_mutate_input():
    raw = cf.load_raw("[madam]\neta = 0.002\n")
    out = cf.with_overrides(raw, {"sim.seed": 4, "eta": "0.003"})
    assert raw == {"madam": {"eta": "0.002"}}
    cfg = cf.build_config(out)
    assert cfg.seed == 4 and cfg.madam.eta == 0.003


def test_emit_defaults_round_trip():
    cfg = SimConfig()
    assert cf.parse_text(cf.emit(cfg)) == cfg


pos = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(
    eta=st.floats(min_value=1e-6, max_value=0.5),
    k=st.tuples(pos, pos, pos, pos),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
    hidden=st.lists(st.integers(min_value=1, max_value=64), min_size=1, max_size=4),
    nn=st.booleans(),
    x0=st.tuples(*[st.floats(min_value=-3, max_value=3)] * 4),
    limit=st.none() | st.tuples(pos, pos),
    form=st.sampled_from(["exp", "linear"]),
)
def test_emit_parse_round_trip(eta, k, seed, hidden, nn, x0, limit, form):
    text = (
        f"[madam]\neta = {eta!r}\nform = {form}\n"
        f"[controller]\nk = {', '.join(map(repr, k))}\n"
        f"torque_limit = {'none' if limit is None else ', '.join(map(repr, limit))}\n"
        f"[network]\nhidden = {', '.join(map(str, hidden))}\n"
        f"[sim]\nseed = {seed}\nnn = {'on' if nn else 'off'}\nx0 = {', '.join(map(repr, x0))}\n"
    )
    cfg = cf.parse_text(text)
    assert cfg.madam.eta_star == pytest.approx(100 * eta)
    again = cf.parse_text(cf.emit(cfg))
    assert again == cfg
    assert cf.emit(again) == cf.emit(cfg)
    assert all(math.isfinite(v) for v in again.x0)
