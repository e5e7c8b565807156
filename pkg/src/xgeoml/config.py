"""Flat ``key = value`` run configuration.

Lines starting with ``#`` are comments.  Unknown keys are rejected, every
value is type-checked at load time, and :meth:`RunConfig.echo` writes the
fully resolved configuration back out in the same format.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .engine import ExplainConfig
from .kernels import KernelSpec
from .learners import LearnerConfig
from .spatial import Schema


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt(conv):
    def parse(text):
        return None if text.strip().lower() in ("", "none", "auto") else conv(text)
    return parse


def _list(conv):
    def parse(text):
        return [conv(p.strip()) for p in text.split(",") if p.strip()]
    return parse


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {options}, got {text!r}")
        return text
    return parse


# key -> (default, parser)
KEYS: dict[str, tuple[str, object]] = {
    "run.seed": ("42", int),
    "run.threads": ("1", int),
    "io.input": ("", str),
    "io.output_dir": ("out", str),
    "io.truth": ("", str),
    "io.delimiter": (",", str),
    "io.schema.id": ("id", str),
    "io.schema.cx": ("cx", str),
    "io.schema.cy": ("cy", str),
    "io.schema.response": ("y", str),
    "io.schema.features": ("", _list(str)),
    "kernel.kind": ("binary", _choice("gaussian", "binary", "gaussian_binary")),
    "kernel.bandwidth_mode": ("adaptive", _choice("fixed", "adaptive")),
    "kernel.b": ("7", float),
    "kernel.k": ("150", int),
    "kernel.sigma_multiplier": ("1", float),
    "learner.kind": ("gbt", _choice("linear", "ridge", "tree", "gbt", "knn")),
    "learner.ridge_lambda": ("1e-06", float),
    "learner.max_depth": ("auto", _opt(int)),
    "learner.n_rounds": ("100", int),
    "learner.learning_rate": ("0.1", float),
    "learner.subsample": ("1", float),
    "learner.k_model": ("5", int),
    "learner.min_samples_leaf": ("1", int),
    "learner.weighting_mode": ("auto", _choice("auto", "sqrt_transform", "sample_weight")),
    "explain.shap.enabled": ("true", _bool),
    "explain.lime.enabled": ("true", _bool),
    "explain.lime.n_samples": ("1000", int),
    "explain.lime.kernel_width": ("auto", _opt(float)),
    "explain.importance.enabled": ("true", _bool),
    "explain.pd.bins": ("20", int),
    "explain.pd.features": ("", _list(int)),
    "explain.pd.binning": ("percentile", _choice("percentile", "uniform")),
    "eval.protocol": ("loo", _choice("loo", "holdout")),
    "eval.test_fraction": ("0.2", float),
    "scan.kinds": ("gaussian,binary,gaussian_binary", _list(_choice("gaussian", "binary", "gaussian_binary"))),
    "scan.modes": ("adaptive,fixed", _list(_choice("fixed", "adaptive"))),
    "scan.grid.fixed": ("2,4,6,8,10,12,14,16,18,20,22,24,26,28,30,32,34,36,38,40", _list(float)),
    "scan.grid.adaptive": (",".join(str(k) for k in range(20, 901, 30)), _list(int)),
    "scan.correlations": ("false", _bool),
    "bench.preset": ("nonlinear", _choice("linear", "nonlinear")),
    "bench.grid_side": ("30", int),
    "bench.noise_sd": ("0.5", float),
    "bench.noise_in_nonlinear": ("true", _bool),
    "bench.cosine_periods": ("2", float),
    "bench.xgeoml_k": ("150", int),
    "bench.fixed_bandwidth": ("7", float),
    "bench.gwr_grid": ("4,6,8,10,15,20,30,40,60,80,120,160,240", _list(int)),
    "bench.linear_grid": ("10,15,20,30,40,60,80,120,160,240", _list(int)),
    "bench.linear_kinds": ("binary,gaussian_binary", _list(_choice("gaussian", "binary", "gaussian_binary"))),
    "bench.pd_bins": ("20", int),
}

ENV_THREADS = "XGEOML_THREADS"


@dataclass
class RunConfig:
    values: dict[str, str]

    @classmethod
    def from_pairs(cls, pairs: dict[str, str] | None = None) -> "RunConfig":
        values = {k: v for k, (v, _) in KEYS.items()}
        for key, raw in (pairs or {}).items():
            if key not in KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = str(raw).strip()
        cfg = cls(values)
        for key in KEYS:
            try:
                cfg.get(key)
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from None
        return cfg

    @classmethod
    def parse(cls, text: str, ignore_prefixes: tuple[str, ...] = ()) -> "RunConfig":
        pairs = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            if key.startswith(ignore_prefixes) and ignore_prefixes:
                continue
            pairs[key] = value.strip()
        return cls.from_pairs(pairs)

    @classmethod
    def load(cls, path) -> "RunConfig":
        """Read a config file; a run report is accepted too (its result lines are skipped)."""
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read(), ignore_prefixes=("result.",))

    def get(self, key: str):
        return KEYS[key][1](self.values[key])

    def set(self, key: str, value) -> "RunConfig":
        return RunConfig.from_pairs({**self.values, key: str(value)})

    @property
    def threads(self) -> int:
        env = os.environ.get(ENV_THREADS)
        return max(1, int(env)) if env else max(1, self.get("run.threads"))

    @property
    def seed(self) -> int:
        return self.get("run.seed")

    def echo(self) -> str:
        return "".join(f"{k} = {self.values[k]}\n" for k in sorted(self.values))

    def schema(self) -> Schema:
        feats = self.get("io.schema.features")
        return Schema(self.get("io.schema.id"), self.get("io.schema.cx"), self.get("io.schema.cy"),
                      self.get("io.schema.response"), tuple(feats) if feats else None)

    def kernel(self) -> KernelSpec:
        mode = self.get("kernel.bandwidth_mode")
        bw = self.get("kernel.b") if mode == "fixed" else self.get("kernel.k")
        return KernelSpec(self.get("kernel.kind"), mode, bw, self.get("kernel.sigma_multiplier"))

    def learner(self) -> LearnerConfig:
        return LearnerConfig(
            kind=self.get("learner.kind"),
            ridge_lambda=self.get("learner.ridge_lambda"),
            max_depth=self.get("learner.max_depth"),
            n_rounds=self.get("learner.n_rounds"),
            learning_rate=self.get("learner.learning_rate"),
            subsample=self.get("learner.subsample"),
            k_model=self.get("learner.k_model"),
            min_samples_leaf=self.get("learner.min_samples_leaf"),
            weighting_mode=self.get("learner.weighting_mode"),
        )

    def explain(self) -> ExplainConfig:
        return ExplainConfig(
            shap=self.get("explain.shap.enabled"),
            lime=self.get("explain.lime.enabled"),
            importance=self.get("explain.importance.enabled"),
            lime_samples=self.get("explain.lime.n_samples"),
            lime_kernel_width=self.get("explain.lime.kernel_width"),
            pd_features=tuple(self.get("explain.pd.features")),
            pd_bins=self.get("explain.pd.bins"),
            pd_binning=self.get("explain.pd.binning"),
        )
