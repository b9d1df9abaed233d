from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from app.cli.config import FORMATS, RunConfig
from app.cli.report import (
    OutputWriter,
    RunReport,
    SummaryRow,
    add_compatibility,
    add_necessity,
    add_regularity,
    add_residual,
)
from app.contour.kernels import (
    fit_xi_exponent,
    kernel_h_contour,
    kernel_h_real,
    kernel_h_scaling,
    scaling_integral,
    scaling_integral_closed_form,
)
from app.contour.nodes import ContourSpec, default_phi
from app.elliptic.operator import EllipticOp, SpaceGrid, resolvent_solve
from app.elliptic.sector import sector_probe
from app.errors import ConfigError
from app.problem.compat import CHECKS
from app.problem.presets import discrete_eigenvalue, eigenmode
from app.problem.solver import residual, solve_parts
from app.regularity.holder import split_leading_power
from app.regularity.verify import necessity_probe, verify_theorem
from app.settings import Settings

logger = logging.getLogger(__name__)

KERNEL_TIMES = (0.1, 1.0, 5.0)
KERNEL_XIS = (0.5, 2.0, 10.0)
KERNEL_ORDERS = (0.3, 0.7, 1.3, 1.8)
KERNEL_TOL = 1e-8
CLASSICAL_TOL = 1e-10
SCALING_TUPLES = ((1.0, 0.0, 1.0, 2.0), (2.0, 0.5, 1.0, 3.0), (1.0, -0.5, 0.5, 2.0))
SCALING_XIS = (0.5, 1.0, 2.0, 4.0, 8.0)
SLOPE_TOL = 1e-3
VALUE_TOL = 1e-6

ORACLE_N = 127
ORACLE_ORDERS = (0.5, 1.0, 1.5)
ORACLE_TIMES = (0.1, 0.5, 1.0)
ORACLE_TOL = 1e-6
HEAT_MODES = (1, 2, 3)
HEAT_TOL = 1e-8
RESOLVENT_PAIRS = 100
RESOLVENT_TOL = 1e-10
PROBE_BOUND = 1.05


@dataclass(frozen=True)
class CommandContext:
    settings: Settings
    config: Optional[RunConfig] = None
    out_dir: Optional[Path] = None
    refine: int = 0
    seed: int = 0

    def run_config(self, command: str) -> RunConfig:
        if self.config is None:
            raise ConfigError(f"{command} needs --config", line=1, col=1)
        return self.config.refined(self.refine)

    def writer(self, stem: str) -> OutputWriter:
        if self.config is None:
            directory, formats = Path("out"), FORMATS
        else:
            directory, formats = Path(self.config.output.directory), self.config.output.formats
        return OutputWriter(directory=self.out_dir or directory, formats=formats, stem=stem)


@dataclass(frozen=True)
class CommandResult:
    report: RunReport

    @property
    def exit_code(self) -> int:
        return 0 if self.report.passed else 1


def _settings_for(ctx: CommandContext, config: RunConfig) -> Settings:
    return config.settings(ctx.settings)


def cmd_solve(ctx: CommandContext) -> CommandResult:
    config = ctx.run_config("solve")
    s = _settings_for(ctx, config)
    spec = config.problem_spec(s)
    preset = config.preset()
    sol = solve_parts(spec, settings=s)
    writer = ctx.writer(spec.label)
    writer.solution(sol.u, sol.x)

    report = RunReport()
    report.heading("solve")
    report.add("label", spec.label)
    report.add("alpha", spec.alpha)
    report.add("n", spec.n)
    report.add("M", spec.M)
    report.add("contour phi", sol.ctx.spec.phi)
    add_residual(report, residual(spec, sol.u))
    if preset is not None and preset.exact is not None:
        error = preset.error(sol.u.values)
        report.add("max error", error)
        report.row(SummaryRow("solve", "max error", error))
    if spec.alpha != 1.0 and spec.M >= 8:
        split = split_leading_power(sol.interior, spec.alpha)
        report.add("leading power sup", float(np.max(np.abs(split.v0))))
        report.add("remainder time exponent", split.remainder_fit.exponent)
    writer.finish("solve", report)
    return CommandResult(report)


def cmd_check_compat(ctx: CommandContext) -> CommandResult:
    config = ctx.run_config("check-compat")
    s = _settings_for(ctx, config)
    spec = config.problem_spec(s)
    report = RunReport()
    for name in ("bounded", "holder"):
        if getattr(config.checks, name):
            add_compatibility(report, CHECKS[name](spec, s))
    if config.checks.necessity_probe:
        extra = config.violation()
        base = spec.f

        def violating_f(t, x):
            return base(t, x) + extra(t, x)

        violating = spec.with_data(f=violating_f, label=f"{spec.label}-violating")
        add_necessity(report, necessity_probe(spec, violating, which="bounded", settings=s), expected="VI")
    if not report.rows:
        report.heading("compatibility")
        report.add("checks", "none enabled")
    ctx.writer(spec.label).finish("check-compat", report)
    return CommandResult(report)


def cmd_verify_regularity(ctx: CommandContext) -> CommandResult:
    config = ctx.run_config("verify-regularity")
    s = _settings_for(ctx, config)
    spec = config.problem_spec(s)
    report = RunReport()
    for name in ("bounded", "holder"):
        if getattr(config.checks, name):
            add_regularity(report, verify_theorem(spec, name, settings=s))
    ctx.writer(spec.label).finish("verify-regularity", report)
    return CommandResult(report)


def _kernel_spec(s: Settings, alpha: float, xi: float) -> ContourSpec:
    # r^alpha must stay below xi so the pole lies to the right of the path
    radius = min(s.contour_radius, 0.5 * xi ** (1.0 / alpha))
    return ContourSpec.from_settings(s, phi=default_phi(alpha)).with_radius(radius)


def cmd_kernel_test(ctx: CommandContext) -> CommandResult:
    s = ctx.settings
    report = RunReport()
    report.heading("kernel h: contour vs real axis")
    for alpha in KERNEL_ORDERS:
        for t in KERNEL_TIMES:
            for xi in KERNEL_XIS:
                by_contour = kernel_h_contour(t, xi, alpha, _kernel_spec(s, alpha, xi))
                by_real = kernel_h_real(t, xi, alpha, settings=s)
                delta = abs(by_contour - by_real)
                report.add(f"alpha={alpha} t={t} xi={xi}", f"{by_real!r} delta {delta:.3e}")
                report.row(SummaryRow("kernel-h", f"alpha={alpha} t={t} xi={xi}", delta, KERNEL_TOL, delta < KERNEL_TOL))

    report.heading("kernel h: classical order")
    for t in KERNEL_TIMES:
        for xi in KERNEL_XIS:
            value = max(abs(kernel_h_real(t, xi, 1.0, settings=s)), abs(kernel_h_contour(t, xi, 1.0, _kernel_spec(s, 1.0, xi))))
            report.add(f"t={t} xi={xi}", value)
            report.row(SummaryRow("kernel-h-classical", f"t={t} xi={xi}", value, CLASSICAL_TOL, value < CLASSICAL_TOL))

    report.heading("kernel h: xi scaling")
    for alpha in KERNEL_ORDERS:
        t_scaled, factor = kernel_h_scaling(1.0, KERNEL_XIS[-1], alpha)
        direct = kernel_h_real(1.0, KERNEL_XIS[-1], alpha, settings=s)
        delta = abs(direct - factor * kernel_h_real(t_scaled, 1.0, alpha, settings=s))
        report.add(f"alpha={alpha}", delta)
        report.row(SummaryRow("kernel-h-scaling", f"alpha={alpha}", delta, KERNEL_TOL, delta < KERNEL_TOL))

    report.heading("scaling integral")
    for a, b, c, d in SCALING_TUPLES:
        key = f"a={a} b={b} c={c} d={d}"
        slope = fit_xi_exponent(a, b, c, d, SCALING_XIS, settings=s)
        expected = (c - b) / d - 1.0
        report.add(f"{key} slope", f"{slope!r} expected {expected!r}")
        report.row(SummaryRow("scaling-slope", key, abs(slope - expected), SLOPE_TOL, abs(slope - expected) < SLOPE_TOL))
        value = scaling_integral(a, b, c, d, 1.0, settings=s)
        exact = scaling_integral_closed_form(a, b, c, d, 1.0)
        gap = abs(value - exact) / abs(exact)
        report.add(f"{key} value", f"{value!r} closed form {exact!r}")
        report.row(SummaryRow("scaling-value", key, gap, VALUE_TOL, gap < VALUE_TOL))
    ctx.writer("kernel").finish("kernel-test", report)
    return CommandResult(report)


def _mode_error(u: np.ndarray, exact: np.ndarray) -> float:
    return float(np.max(np.abs(u - exact)) / max(float(np.max(np.abs(exact))), 1e-300))


def _time_index(t: np.ndarray, value: float) -> int:
    return int(np.argmin(np.abs(t - value)))


def cmd_oracle(ctx: CommandContext) -> CommandResult:
    s = ctx.settings
    n = ctx.config.problem.n if ctx.config is not None else ORACLE_N
    report = RunReport()

    report.heading("mittag-leffler modes")
    for alpha in ORACLE_ORDERS:
        preset = eigenmode(alpha, 0.5, n, 10)
        sol = solve_parts(preset.spec, settings=s)
        t = sol.u.t
        tt, xx = np.meshgrid(t, sol.x, indexing="ij")
        exact = preset.exact(tt, xx)
        for target in ORACLE_TIMES:
            i = _time_index(t, target)
            err = _mode_error(sol.u.values[i], exact[i])
            report.add(f"alpha={alpha} t={target}", err)
            report.row(SummaryRow("oracle-ml", f"alpha={alpha} t={target}", err, ORACLE_TOL, err <= ORACLE_TOL))

    report.heading("heat modes")
    for k in HEAT_MODES:
        preset = eigenmode(1.0, 0.5, n, 10, k=k)
        sol = solve_parts(preset.spec, settings=s)
        mu = discrete_eigenvalue(k, n)
        shape = np.sin(k * np.pi * sol.x)
        err = max(_mode_error(sol.u.values[i], math.exp(-mu * ti) * shape) for i, ti in enumerate(sol.u.t))
        report.add(f"k={k}", err)
        report.row(SummaryRow("oracle-heat", f"k={k}", err, HEAT_TOL, err <= HEAT_TOL))

    report.heading("resolvent")
    op = EllipticOp.laplacian(SpaceGrid(n), alpha=0.5)
    rng = np.random.default_rng(ctx.seed)
    worst = 0.0
    for _ in range(RESOLVENT_PAIRS):
        z1, z2 = (r * np.exp(1j * a) for r, a in zip(rng.uniform(1.0, 100.0, 2), rng.uniform(-1.5, 1.5, 2)))
        rhs = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        r1 = resolvent_solve(op, z1, rhs)
        r2 = resolvent_solve(op, z2, rhs)
        lhs = r1 - r2
        rhs_side = (z2 - z1) * resolvent_solve(op, z1, r2)
        worst = max(worst, float(np.max(np.abs(lhs - rhs_side)) / max(float(np.max(np.abs(r1))), 1e-300)))
    report.add("identity worst", worst)
    report.row(SummaryRow("oracle-resolvent", "identity", worst, RESOLVENT_TOL, worst <= RESOLVENT_TOL))

    probe = sector_probe(op, [math.pi / 2, -math.pi / 2], list(np.logspace(-2, 5, 15)), seed=ctx.seed, norm="2")
    report.add("imaginary axis sup", probe.sup)
    report.row(SummaryRow("oracle-resolvent", "sector probe", probe.sup, PROBE_BOUND, probe.sup <= PROBE_BOUND))
    ctx.writer("oracle").finish("oracle", report)
    return CommandResult(report)


COMMANDS: dict[str, Callable[[CommandContext], CommandResult]] = {
    "solve": cmd_solve,
    "check-compat": cmd_check_compat,
    "verify-regularity": cmd_verify_regularity,
    "kernel-test": cmd_kernel_test,
    "oracle": cmd_oracle,
}


def handle_command(ctx: CommandContext, name: str) -> CommandResult:
    try:
        handler = COMMANDS[name]
    except KeyError:
        raise ConfigError(f"unknown command {name!r}; choose from {', '.join(COMMANDS)}", line=1, col=1) from None
    logger.info("command name=%s refine=%s seed=%s", name, ctx.refine, ctx.seed)
    result = handler(ctx)
    logger.info("command name=%s exit=%s rows=%s", name, result.exit_code, len(result.report.rows))
    return result
