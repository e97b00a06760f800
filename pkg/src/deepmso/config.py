"""Sectioned ``key = value`` experiment files.

Every key is optional; missing keys take the reference experiment's
values. Unknown sections or keys are rejected. Vectors and diagonal
matrices are written as comma lists::

    [controller]
    k = 7.5, 7.5, 7.5, 7.5

    [madam]
    eta = 0.0005        # eta_star defaults to 100 * eta
"""
import configparser
import dataclasses
import math
import re

from deepmso.errors import ConfigurationError, ParseError
from deepmso.madam import MadamHyper
from deepmso.plant import PlantParams
from deepmso.sim import ControllerSettings, NetworkSettings, ObserverSettings, SimConfig

_TRUE = {"on", "true", "yes", "1"}
_FALSE = {"off", "false", "no", "0"}


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"{s!r} is not finite")
    return v


def _floats(s):
    return tuple(_float(v) for v in s.split(","))


def _ints(s):
    return tuple(int(v) for v in s.split(","))


def _opt_floats(s):
    return None if s.strip().lower() == "none" else _floats(s)


def _bool(s):
    v = s.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ValueError(f"{s!r} is not a boolean (use on/off)")


def _word(s):
    return s.strip()


def _fmt(v):
    if isinstance(v, bool):
        return "on" if v else "off"
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


# section -> key -> (parser, attribute on the section object)
SCHEMA = {
    "plant": {k: (_float, k) for k in ("l1", "l2", "m1", "m2", "gravity")},
    "controller": {
        "k": (_floats, "k"),
        "slack_gain": (_float, "slack_gain"),
        "u_slack": (_floats, "u_slack"),
        "torque_limit": (_opt_floats, "torque_limit"),
        "control_matrix": (_word, "control_matrix"),
    },
    "observer": {
        "k2": (_floats, "k2"),
        "lambda": (_floats, "error_scale"),
        "feedback": (_word, "feedback"),
        "net_input": (_word, "net_input"),
        "input_shift": (_floats, "input_shift"),
        "input_scale": (_floats, "input_scale"),
    },
    "network": {
        "hidden": (_ints, "hidden"),
        "init": (_word, "init"),
        "bias_std": (_float, "bias_std"),
    },
    "madam": {
        "eta": (_float, "eta"),
        "eta_star": (_float, "eta_star"),
        "sigma_star": (_float, "sigma_star"),
        "beta": (_float, "beta"),
        "form": (_word, "form"),
    },
    "sim": {
        "dt": (_float, "dt"),
        "t_final": (_float, "t_final"),
        "x0": (_floats, "x0"),
        "x_hat0": (_opt_floats, "x_hat0"),
        "nn": (_bool, "nn"),
        "oracle": (_bool, "oracle"),
        "seed": (int, "seed"),
        "settle": (_float, "settle"),
        "integrator": (_word, "integrator"),
    },
}

ETA_STAR_RATIO = 100.0


def _line_of(text, section, key=None):
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip().lower()
            if key is None and current == section:
                return i
            continue
        if key is not None and current == section:
            m = re.match(r"\s*([^=:#;\s]+)\s*[=:]", line)
            if m and m.group(1).lower() == key:
                return i
    return None


def load_raw(text):
    """Parse and check keys; returns ``{section: {key: raw_string}}``."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ParseError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ParseError(f"duplicate section [{exc.section}]", exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("key outside of any [section]", exc.lineno) from None
    except configparser.Error as exc:
        raise ParseError(str(exc)) from None
    raw = {}
    for section in cp.sections():
        name = section.strip().lower()
        if name not in SCHEMA:
            raise ParseError(f"unknown section [{section}]", _line_of(text, name))
        for key, value in cp.items(section):
            if key not in SCHEMA[name]:
                raise ParseError(f"unknown key {key!r} in [{name}]", _line_of(text, name, key))
            raw.setdefault(name, {})[key] = value
    return raw


def build_config(raw, text=""):
    """Turn checked raw strings into a validated :class:`SimConfig`."""
    values = {}
    for section, items in raw.items():
        for key, value in items.items():
            parser, attr = SCHEMA[section][key]
            try:
                values.setdefault(section, {})[attr] = parser(value)
            except ValueError as exc:
                raise ParseError(
                    f"bad value for {section}.{key}: {value!r} ({exc})", _line_of(text, section, key)
                ) from None
    madam = dict(values.get("madam", {}))
    form = madam.pop("form", "exp")
    if "eta_star" not in madam:
        madam["eta_star"] = ETA_STAR_RATIO * madam.get("eta", MadamHyper.eta)
    sim = values.get("sim", {})
    try:
        return SimConfig(
            plant=PlantParams(**values.get("plant", {})),
            controller=ControllerSettings(**values.get("controller", {})),
            observer=ObserverSettings(**values.get("observer", {})),
            network=NetworkSettings(**values.get("network", {})),
            madam=MadamHyper(**madam),
            madam_form=form,
            **sim,
        )
    except ConfigurationError as exc:
        raise ParseError(str(exc)) from None


def parse_text(text):
    return build_config(load_raw(text), text)


def parse_experiment(path):
    with open(path, encoding="utf-8") as fh:
        return parse_text(fh.read())


def with_overrides(raw, overrides):
    """Copy of ``raw`` with ``{"section.key" or "key": value}`` applied."""
    out = {s: dict(items) for s, items in raw.items()}
    for name, value in overrides.items():
        section, key = resolve_key(name)
        out.setdefault(section, {})[key] = str(value)
    return out


def resolve_key(name):
    """Map ``"madam.eta"`` or an unambiguous bare ``"eta"`` to ``(section, key)``."""
    if "." in name:
        section, key = name.split(".", 1)
        if section in SCHEMA and key in SCHEMA[section]:
            return section, key
        raise ConfigurationError(f"unknown key {name!r}")
    hits = [s for s, keys in SCHEMA.items() if name in keys]
    if len(hits) != 1:
        what = "unknown" if not hits else "ambiguous"
        raise ConfigurationError(f"{what} key {name!r}")
    return hits[0], name


def emit(cfg):
    """Canonical text form; ``parse_text(emit(cfg)) == cfg``."""
    objs = {
        "plant": cfg.plant,
        "controller": cfg.controller,
        "observer": cfg.observer,
        "network": cfg.network,
        "madam": cfg.madam,
        "sim": cfg,
    }
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (_, attr) in keys.items():
            if section == "madam" and key == "form":
                value = cfg.madam_form
            else:
                value = getattr(objs[section], attr)
            lines.append(f"{key} = {_fmt(value)}")
        lines.append("")
    return "\n".join(lines)


def as_dict(cfg):
    return dataclasses.asdict(cfg)
