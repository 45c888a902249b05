"""
Experiment pipeline that orchestrates the numerical modules for one subcommand.
"""

import logging
import math
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .config import ExperimentConfig
from .decompose import (
    GaussianMixture,
    class_A_check,
    decompose,
    random_mixture,
    residual_l2,
    step_extension,
    mixture_error_bound,
)
from .errors import ConfigError, DomainError
from .hermite import PointFunction, hermite_coeffs, hermite_series, mesh_points
from .observability import DomainSpec, certify, counterexample_mass, observability_inequality, quadrature_ratio
from .oscillator import HamiltonianFlow, OscillatorSpec, flow_residual, hamiltonian_flow, make_oscillator
from .propagate import GridSpec, PropagatedPacket, parametrix, slice_rows
from .reference import compare_parametrix, l2_norm_spacetime, split_step_solve
from .riccati import RiccatiSolution, riccati_residual, solve_riccati, trimmed_horizon
from .storage import ReportStorage

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("flow", "riccati", "decompose", "propagate", "certify", "validate", "counterexample")

DEFAULT_N = 3
DEFAULT_EPS0 = 0.02
DEFAULT_POINTS = 4096
DEFAULT_STEPS_PER_UNIT_TIME = 1024
GRID_MASS_POINTS = 20001
# Step extensions vanish outside [-10M, 10M] per axis.
STEP_SUPPORT = 10.0


class ExperimentPipeline:
    """
    Runs one subcommand of an experiment and writes its reports.
    """

    def __init__(self, config: ExperimentConfig, out_dir: Optional[str] = None, seed: Optional[int] = None):
        """
        Initialize the pipeline.

        Args:
            config: Validated experiment configuration
            out_dir: Output directory (defaults to outputs.dir of the config)
            seed: Seed for random initial data (defaults to the config seed)
        """
        self.config = config
        self.seed = seed if seed is not None else config.seed
        self.storage = ReportStorage(out_dir or config.out_dir, config_hash=config.config_hash)
        self.T = config.T
        self.dim = config.dim
        self.tol = config.data.get("tol")
        self.osc = self._build_oscillator()
        self._flow: Optional[HamiltonianFlow] = None
        self._riccati: Optional[RiccatiSolution] = None

    def _build_oscillator(self) -> OscillatorSpec:
        section = self.config.section("oscillator")
        return make_oscillator(section["preset"], section.get("params"), section.get("table"))

    def _decomposition(self) -> Tuple[int, float]:
        section = self.config.section("decomposition")
        return int(section.get("N", DEFAULT_N)), float(section.get("eps0", DEFAULT_EPS0))

    def domain(self) -> DomainSpec:
        section = self.config.section("domain")
        if not section:
            raise ConfigError("this subcommand needs a 'domain' section", pointer="/domain")
        return DomainSpec(float(section["diam_omega"]), float(section["R0"]), float(section["R"]), self.dim)

    def hamiltonian(self) -> HamiltonianFlow:
        if self._flow is None:
            kwargs = {"tol": self.tol} if self.tol else {}
            self._flow = hamiltonian_flow(self.osc, self.T, **kwargs)
        return self._flow

    def phases(self) -> RiccatiSolution:
        if self._riccati is None:
            horizon = trimmed_horizon(self.hamiltonian(), self.T)
            self._riccati = solve_riccati(self.osc, horizon)
        return self._riccati

    def initial_data(self) -> Tuple[PointFunction, GaussianMixture, Dict]:
        """
        Build the initial datum of the config.

        Returns:
            (source function, mixture, details for reports)
        """
        section = self.config.section("initial_data")
        kind = section.get("kind")
        if kind == "mixture":
            centers = np.asarray(section["centers"], dtype=float)
            if centers.shape[1] != self.dim:
                raise ConfigError(
                    f"centers have dimension {centers.shape[1]}, config dim is {self.dim}",
                    pointer="/initial_data/centers",
                )
            coeffs = np.asarray(section["coeffs"], dtype=float)
            mix = GaussianMixture(
                self.dim, max(len(coeffs) - 1, 0), 0.0, centers, coeffs, eta=float(section.get("eta", 0.0))
            )
            return mix.evaluate, mix, {"kind": kind}
        if kind == "step_extension":
            M, dx = float(section["M"]), float(section["dx"])
            phi, mix, sup_bound = step_extension(M, dx, section.get("shift"), self.dim)
            return phi, mix, {"kind": kind, "M": M, "dx": dx, "shift": section.get("shift"), "sup_bound": sup_bound}
        if kind == "hermite_list":
            N, eps0 = self._decomposition()
            f = hermite_series(section["alphas"], self.dim)
            return f, decompose(f, N, eps0, self.dim), {"kind": kind, "N": N, "eps0": eps0}
        if kind == "random_mixture":
            rng = np.random.default_rng(self.seed)
            mix = random_mixture(rng, int(section["packets"]), self.dim, float(section.get("center_scale", 1.0)))
            return mix.evaluate, mix, {"kind": kind, "seed": self.seed}
        raise ConfigError("this subcommand needs an 'initial_data' section", pointer="/initial_data")

    def grid_for(self, mix: GaussianMixture, ric: RiccatiSolution, details: Optional[Dict] = None) -> GridSpec:
        section = self.config.section("grid")
        points = int(section.get("points_per_dim", DEFAULT_POINTS if self.dim == 1 else 256))
        if "half_width" in section:
            return GridSpec(self.dim, float(section["half_width"]), points)
        support = 0.0
        if details and details["kind"] == "step_extension":
            shift = np.asarray(details.get("shift") or [0.0], dtype=float)
            support = STEP_SUPPORT * details["M"] + float(np.max(np.abs(shift)))
        return GridSpec.sized_for(mix, ric, ric.horizon, points, support)

    def flow(self) -> Dict:
        logger.info("Step 1: Integrating the Hamiltonian flow...")
        flow = self.hamiltonian()
        logger.info("Step 2: Saving trajectories...")
        self.storage.save_csv("flow", ["t", "x", "p"], np.column_stack([flow.t_samples, flow.x, flow.p]).tolist())
        report = {
            "preset": self.osc.preset.value,
            "T": self.T,
            "T_D": float(flow.T_D) if flow.crossed else str(flow.T_D),
            "residual": flow_residual(flow, self.osc),
        }
        self.storage.save_json("flow", report)
        return report

    def riccati(self) -> Dict:
        logger.info("Step 1: Solving the phase equations...")
        ric = self.phases()
        logger.info("Step 2: Saving phase coefficients...")
        self.storage.save_csv("riccati", ["t", "y1", "y2", "y3", "a"], ric.rows())
        report = {
            "preset": self.osc.preset.value,
            "horizon": ric.horizon,
            "residual": riccati_residual(ric, self.osc),
            "amplitude_identity": float(np.max(np.abs(ric.y2 - ric.a**2))),
        }
        self.storage.save_json("riccati", report)
        return report

    def decompose(self) -> Dict:
        logger.info("Step 1: Building the initial datum...")
        f, mix, details = self.initial_data()
        logger.info(f"Step 2: Measuring the residual of {len(mix)} packets...")
        half_width = mix.max_center_norm() + 8.0
        if details["kind"] == "step_extension":
            half_width = STEP_SUPPORT * details["M"] + mix.max_center_norm()
        elif details["kind"] == "hermite_list":
            half_width = mix.N * mix.eps0 + 8.0
        residual, f_norm = residual_l2(mix, f, half_width)
        report = dict(details)
        report.update(
            {
                "packets": len(mix),
                "residual": residual,
                "f_norm": f_norm,
                "eta": mix.eta,
                "tail": mix.tail,
                "spread": mix.spread(),
                "max_center_norm": mix.max_center_norm(),
                "positive": mix.all_positive,
                "class_A": class_A_check(mix, f, mix.eta, half_width),
            }
        )
        if details["kind"] == "hermite_list":
            report["bound"] = mixture_error_bound(mix.N, mix.eps0, self.dim, f_norm, mix.tail)
            coeffs = hermite_coeffs(f, mix.N, self.dim)
            self.storage.save_csv("hermite_coefficients", ["index", "d_n"], coeffs.rows())
        logger.info("Step 3: Saving the mixture...")
        self.storage.save_json("mixture", mix.to_dict())
        header = [f"a{i}" for i in range(self.dim)] + ["c"]
        self.storage.save_csv("mixture", header, mix.rows())
        self.storage.save_json("decomposition", report)
        return report

    def propagate(self) -> Dict:
        logger.info("Step 1: Building the initial datum and phases...")
        _, mix, details = self.initial_data()
        ric = self.phases()
        grid = self.grid_for(mix, ric, details)
        times = self.config.section("propagate").get("times", [ric.horizon])
        logger.info(f"Step 2: Evaluating the parametrix at {len(times)} times on {grid.shape} points...")
        dumps = []
        for index, t in enumerate(times):
            field = parametrix(mix, ric, float(t), grid)
            name = f"field_{index:03d}"
            self.storage.save_field(name, field.values, grid, float(t))
            self.storage.save_csv(f"slice_{index:03d}", ["x", "re", "im", "abs2"], slice_rows(field.values, grid))
            dumps.append({"name": name, "t": float(t), "norm": grid.norm(field.values)})
        report = {"grid": {"dim": grid.dim, "L": grid.half_width, "n": grid.points_per_dim}, "fields": dumps}
        self.storage.save_json("propagate", report)
        return report

    def _certificate_inputs(self, dom: DomainSpec) -> Dict:
        section = self.config.section("certificate")
        inputs = {"N": int(section.get("N", self._decomposition()[0])), "eps": float(section.get("eps", 0.0))}
        inputs["alpha_N"] = section.get("alpha_N")
        inputs["R1"] = section.get("R1")
        data = self.config.section("initial_data")
        if data:
            f, mix, details = self.initial_data()
            if inputs["alpha_N"] is None:
                inputs["alpha_N"] = mix.spread()
            if inputs["R1"] is None:
                inputs["R1"] = mix.max_center_norm()
            if "eps" not in section:
                inputs["eps"] = mix.eps0
            if details["kind"] == "step_extension":
                M = details["M"]
                _, phi_norm = residual_l2(mix, f, STEP_SUPPORT * M + mix.max_center_norm())
                inputs["linfty"] = (M, details["dx"], phi_norm)
        return inputs

    def certify(self) -> Dict:
        logger.info("Step 1: Solving the phase equations...")
        ric = self.phases()
        dom = self.domain()
        inputs = self._certificate_inputs(dom)
        logger.info("Step 2: Evaluating the observability constants...")
        cert = certify(
            ric,
            dom,
            ric.horizon,
            inputs["N"],
            inputs["eps"],
            alpha_N=inputs["alpha_N"],
            R1=inputs["R1"],
            linfty=inputs.get("linfty"),
        )
        report = cert.to_dict()
        report["quadrature_ratio"] = quadrature_ratio(ric, dom, ric.horizon)
        logger.info("Step 3: Saving the certificate...")
        self.storage.save_csv("certificate", ["t", "A", "eps", "delta"], cert.rows())
        self.storage.save_json("certificate", report)
        return report

    def validate(self) -> Dict:
        logger.info("Step 1: Building the initial datum and phases...")
        f, mix, details = self.initial_data()
        ric = self.phases()
        grid = self.grid_for(mix, ric, details)
        T = ric.horizon
        section = self.config.section("reference")
        steps = max(1, int(math.ceil(section.get("steps_per_unit_time", DEFAULT_STEPS_PER_UNIT_TIME) * T)))
        samples = int(section.get("samples", 65))
        save_every = max(1, steps // (samples - 1))

        logger.info(f"Step 2: Running the split-step reference with {steps} steps...")
        u0 = np.asarray(f(mesh_points([grid.axis()] * grid.dim)), dtype=complex)
        sol = split_step_solve(self.osc, u0, T, steps, grid, save_every=save_every)

        logger.info("Step 3: Comparing with the parametrix...")
        comparison = compare_parametrix(sol, mix, ric)
        report = comparison.to_dict()
        report.update(
            {"T": T, "steps": steps, "mass_drift": sol.mass_drift, "mass_conserved": sol.mass_conserved}
        )

        if self.config.section("domain"):
            logger.info("Step 4: Measuring the observed norm...")
            dom = self.domain()
            inputs = self._certificate_inputs(dom)
            cert = certify(ric, dom, T, inputs["N"], inputs["eps"])
            observed = l2_norm_spacetime(sol, dom)
            u0_norm = grid.norm(u0)
            eta = mix.eta
            report["observability"] = {
                "u0_norm": u0_norm,
                "observed_norm": observed,
                "C_T": cert.C_T,
                "eta": eta,
                "N": inputs["N"],
                "eps": inputs["eps"],
                "req_ok": cert.req.ok,
                "eps_max": cert.req.eps_max,
                "holds": observability_inequality(u0_norm, observed, cert.C_T, eta, T),
                "holds_linfty": observability_inequality(u0_norm, observed, cert.C_T_linfty, eta, T),
            }
        self.storage.save_csv("validate", ["t", "error"], comparison.rows())
        self.storage.save_json("validate", report)
        return report

    def counterexample(self) -> Dict:
        logger.info("Step 1: Solving the phase equations...")
        ric = self.phases()
        section = self.config.section("counterexample")
        domain = self.config.section("domain")
        t = float(section.get("t", ric.horizon))
        R = float(section.get("R", domain.get("R", 1.0)))
        shifts = np.linspace(0.0, float(section.get("shift_max", 20.0)), int(section.get("shift_count", 41)))

        logger.info(f"Step 2: Sweeping {shifts.size} shifts at t={t}, R={R}...")
        masses = np.array([counterexample_mass(float(s), ric, t, R, self.dim) for s in shifts])
        header = ["shift", "mass"]
        columns = [shifts, masses]
        if self.dim == 1:
            grid_masses = np.array([grid_mass(float(s), ric, t, R) for s in shifts])
            header.append("grid_mass")
            columns.append(grid_masses)
        self.storage.save_csv("counterexample", header, np.column_stack(columns).tolist())
        report = {
            "t": t,
            "R": R,
            "shift_max": float(shifts[-1]),
            "monotone": bool(np.all(np.diff(masses) <= 0.0)),
            "final_mass": float(masses[-1]),
        }
        if self.dim == 1:
            report["max_disagreement"] = float(np.max(np.abs(grid_masses - masses)))
        self.storage.save_json("counterexample", report)
        return report

    def run(self, subcommand: str) -> Dict:
        """
        Run a subcommand and write the manifest.

        Returns:
            The subcommand's JSON report

        Raises:
            DomainError: For an unknown subcommand
            ConfigError: If the subcommand needs a section the config lacks
        """
        handlers: Dict[str, Callable[[], Dict]] = {name: getattr(self, name) for name in SUBCOMMANDS}
        if subcommand not in handlers:
            raise DomainError(f"unknown subcommand '{subcommand}'")
        logger.info(f"Running '{subcommand}' for {self.osc.preset.value} on [0, {self.T}]")
        report = handlers[subcommand]()
        self.storage.write_manifest()
        logger.info(f"Pipeline complete. Artifacts in {self.storage.out_dir}")
        return report


def grid_mass(delta_shift: float, ric: RiccatiSolution, t: float, R: float) -> float:
    """Quadrature of |phi(t, x)|^2 over x >= R for the packet started from exp(-(x + delta)^2)."""
    packet = PropagatedPacket(np.array([delta_shift]), ric)
    width = 12.0 / math.sqrt(float(ric.spread(t)))
    x = np.linspace(R, R + width, GRID_MASS_POINTS)
    density = np.abs(packet.evaluate(t, x[:, None])) ** 2
    return float(trapezoid(density, x))
