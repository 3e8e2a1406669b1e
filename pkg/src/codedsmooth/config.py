"""Flat key=value run-config files.

One ``key = value`` pair per line, ``#`` starts a comment, keys are dotted
(``train.lr``, ``attack.epsilon``, ``sim.N``). Unknown keys are rejected so
a typo cannot silently fall back to a default. Every command echoes its
fully-resolved configuration into the output directory; re-running from
that echo reproduces the outputs exactly.
"""

from .errors import ValidationError

# every key any subcommand understands; one config file may drive several
# commands (e.g. a train followed by an attack on its model file)
KNOWN_KEYS = {
    # dataset
    "data.kind", "data.n_train", "data.n_test", "data.noise", "data.seed",
    # model
    "model.widths", "model.activation",
    # training
    "train.method", "train.mu", "train.gamma", "train.n_schedule",
    "train.mixup_alpha", "train.epochs", "train.batch_size", "train.lr",
    "train.lr_decay_epochs", "train.momentum", "train.seed",
    # attack / inference
    "attack.kind", "attack.epsilon", "attack.steps", "attack.step_size",
    "attack.random_start", "attack.trials", "attack.n_prime",
    "attack.k_prime", "attack.seed",
    # rate experiment
    "lemma1.K", "lemma1.N_list", "lemma1.fn", "lemma1.seed",
    # straggler simulation
    "sim.fn", "sim.K", "sim.N_list", "sim.S_list", "sim.seeds",
    "sim.policy", "sim.input_seed",
    # parameter sweep
    "sweep.param", "sweep.values", "sweep.seeds",
    # point printing
    "points.K", "points.N",
}


def parse_config_text(text: str) -> dict:
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in KNOWN_KEYS:
            raise ValidationError(f"config line {lineno}: unknown key {key!r}")
        if key in cfg:
            raise ValidationError(f"config line {lineno}: duplicate key {key!r}")
        cfg[key] = value
    return cfg


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def dump_config(cfg: dict) -> str:
    """Deterministic echo of a resolved configuration."""
    return "".join(f"{key} = {cfg[key]}\n" for key in sorted(cfg))


class Config:
    """Typed access with defaults over the flat key/value map."""

    def __init__(self, raw: dict):
        self.raw = dict(raw)

    def _get(self, key, default):
        if key in self.raw:
            return self.raw[key]
        if default is _REQUIRED:
            raise ValidationError(f"missing required config key {key!r}")
        return default

    def get_str(self, key, default=None):
        v = self._get(key, default)
        return v if v is None else str(v)

    def get_int(self, key, default=None):
        v = self._get(key, default)
        if v is None or isinstance(v, int):
            return v
        try:
            return int(v)
        except ValueError:
            raise ValidationError(f"config key {key!r}: {v!r} is not an integer") from None

    def get_float(self, key, default=None):
        v = self._get(key, default)
        if v is None or isinstance(v, float):
            return v
        try:
            return float(v)
        except ValueError:
            raise ValidationError(f"config key {key!r}: {v!r} is not a number") from None

    def get_bool(self, key, default=None):
        v = self._get(key, default)
        if v is None or isinstance(v, bool):
            return v
        if v.lower() in ("true", "1", "yes"):
            return True
        if v.lower() in ("false", "0", "no"):
            return False
        raise ValidationError(f"config key {key!r}: {v!r} is not a boolean")

    def get_int_list(self, key, default=None):
        v = self._get(key, default)
        if v is None or isinstance(v, (list, tuple)):
            return v
        try:
            return [int(p) for p in str(v).split(",") if p.strip()]
        except ValueError:
            raise ValidationError(f"config key {key!r}: {v!r} is not an integer list") from None

    def get_float_list(self, key, default=None):
        v = self._get(key, default)
        if v is None or isinstance(v, (list, tuple)):
            return v
        try:
            return [float(p) for p in str(v).split(",") if p.strip()]
        except ValueError:
            raise ValidationError(f"config key {key!r}: {v!r} is not a number list") from None


class _Required:
    pass


_REQUIRED = _Required()
REQUIRED = _REQUIRED
