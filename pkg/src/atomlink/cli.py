"""``atomlink`` command-line front end.

Reports go to stdout; CSV/JSON artifacts go to the output directory
(``--output-dir``, else ``$ATOMLINK_OUTPUT_DIR``, else ``./atomlink-out``)
together with a ``manifest.json`` listing each file and its SHA-256.

Exit codes: 0 success, 1 validation/usage error, 2 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from atomlink import acceptance, gates, quantum, sim
from atomlink.errors import ConfigurationError
from atomlink.layout import ChainSpec, pack_zones
from atomlink.species import (
    SpeciesKind,
    builtin_species,
    classify_charge_exchange,
    get_species,
    load_table,
    save_table,
)
from atomlink.tweezer import (
    ProfileKind,
    TweezerParams,
    emit_aod_waveform,
    plan_transport,
    reference_speed_check,
    trap_profile,
)

log = logging.getLogger("atomlink")

OUTPUT_ENV = "ATOMLINK_OUTPUT_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


@dataclass
class RunManifest:
    subcommand: str
    output_dir: str
    config: str | None = None
    seed: int | None = None
    artifacts: list[dict] = field(default_factory=list)

    def add(self, path: Path) -> None:
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.artifacts.append({"path": path.name, "sha256": digest})

    def write(self) -> Path:
        path = Path(self.output_dir) / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2) + "\n")
        return path


def _positive(name):
    def conv(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return v
    return conv


def _nonneg(name):
    def conv(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number") from None
        if v < 0:
            raise argparse.ArgumentTypeError(f"{name} must be >= 0")
        return v
    return conv


def _outdir(args) -> Path:
    d = Path(args.output_dir or os.environ.get(OUTPUT_ENV) or "atomlink-out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _species_table(args):
    if getattr(args, "species_json", None):
        return load_table(args.species_json)
    return builtin_species()


# -- subcommands -----------------------------------------------------------


def cmd_trap(args, man: RunManifest):
    atom = get_species(args.species, _species_table(args))
    params = TweezerParams(
        args.power_mw * 1e-3, args.waist_um * 1e-6, args.wavelength_nm * 1e-9, atom,
        args.polarizability_au,
    )
    p = trap_profile(params)
    print(f"species            {atom.name}")
    print(f"trap depth         {p.depth_mK:.4g} mK ({p.depth:.4e} J)")
    print(f"radial frequency   2pi x {p.f_radial / 1e6:.4g} MHz")
    print(f"axial frequency    2pi x {p.f_axial / 1e6:.4g} MHz")
    print(f"Rayleigh range     {p.rayleigh_range * 1e6:.4g} um")
    print(f"max acceleration   {p.max_acceleration:.4e} m/s^2")
    print(f"safe acceleration  {p.safe_acceleration(args.safety_factor):.4e} m/s^2 "
          f"(x{args.safety_factor:g})")
    out = _outdir(args) / "trap.json"
    out.write_text(json.dumps({**asdict(p), "depth_mK": p.depth_mK}, indent=2) + "\n")
    man.add(out)


def cmd_transport(args, man: RunManifest):
    if args.a_limit_m_s2 is not None:
        a_limit = args.a_limit_m_s2
    else:
        prof = trap_profile(TweezerParams(0.25, 1e-6, 1064e-9, get_species("Li6")))
        a_limit = prof.safe_acceleration(args.safety_factor)
    plan = plan_transport(args.distance_um * 1e-6, a_limit, args.v_limit_m_s, args.profile)
    wave = emit_aod_waveform(plan, args.center_mhz * 1e6, args.scale_um_per_mhz * 1e-12)
    print(f"profile            {plan.profile_kind.value}")
    print(f"distance           {plan.distance * 1e6:.4g} um")
    print(f"acceleration limit {a_limit:.4e} m/s^2")
    print(f"duration           {plan.duration * 1e6:.4g} us")
    if plan.duration > 0:
        print(f"peak velocity      {plan.peak_velocity:.4g} m/s")
        print(f"vs 0.55 um/us      x{reference_speed_check(plan):.3g}")
    else:
        print("no motion")
    print(f"final AOD drive    {wave.drive_frequency[-1] / 1e6:.6g} MHz")
    d = _outdir(args)
    plan.to_csv(d / "transport.csv")
    wave.to_csv(d / "aod.csv")
    man.add(d / "transport.csv")
    man.add(d / "aod.csv")


def cmd_charge_exchange(args, man: RunManifest):
    table = _species_table(args)
    if args.export_species:
        save_table(args.export_species, table)
    if args.atom and args.ion:
        pairs = [(get_species(args.atom, table), get_species(args.ion, table))]
    elif args.atom or args.ion:
        raise UsageError("charge-exchange needs both ATOM and ION, or neither for the full table")
    else:
        atoms = [s for s in table if s.kind is SpeciesKind.NEUTRAL_ATOM]
        ions = [s for s in table if s.kind is SpeciesKind.SINGLY_CHARGED_ION]
        pairs = [(a, i) for a in atoms for i in ions]
    rows = []
    for a, i in pairs:
        v = classify_charge_exchange(a, i)
        print(f"{a.name:>6} + {i.name:<7} {v.classification.value:<13} gap {v.energy_gap:+10.1f} cm^-1")
        rows.append({"atom": a.name, "ion": i.name, "classification": v.classification.value,
                     "energy_gap": v.energy_gap})
    out = _outdir(args) / "charge_exchange.json"
    out.write_text(json.dumps(rows, indent=2) + "\n")
    man.add(out)


def cmd_layout(args, man: RunManifest):
    chain = ChainSpec(args.num_ions, args.ion_spacing_um * 1e-6)
    lay = pack_zones(args.fov_mm * 1e-3, args.pitch_um * 1e-6, chain, args.margin_um * 1e-6)
    print(f"field of view      {lay.fov_diameter * 1e3:.4g} mm")
    print(f"zone pitch         {lay.zone_pitch * 1e6:.4g} um")
    print(f"chain              {chain.num_ions} ions, extent {chain.extent * 1e6:.4g} um")
    print(f"zones              {lay.zone_count}")
    print(f"total qubits       {lay.total_qubits}")
    d = _outdir(args)
    lay.save_json(d / "layout.json")
    lay.write_ion_csv(d / "ions.csv")
    man.add(d / "layout.json")
    man.add(d / "ions.csv")


def cmd_verify_protocol(args, man: RunManifest):
    if args.gate_fidelity is not None:
        p = quantum.depolarizing_from_fidelity(args.gate_fidelity)
    else:
        p = args.depolarizing_p
    res = quantum.run_messenger_protocol(
        args.phase_rad, p, seed=args.seed, apply_correction=args.correct, mode=args.mode
    )
    man.seed = args.seed
    print(f"depolarizing p     {p:.6g}")
    print(f"outcome            {res.measurement_outcome}  (p0={res.branch_probabilities[0]:.6f})")
    print(f"target             {res.target}")
    print(f"bell fidelity      {res.bell_fidelity:.12f}")
    out = _outdir(args) / "protocol.json"
    out.write_text(res.to_json(include_state=args.amplitudes) + "\n")
    man.add(out)


def cmd_rate(args, man: RunManifest):
    kinds = ["collisional", "rydberg"] if args.gate == "all" else [args.gate]
    rows = []
    print(f"{'gate':<12} {'t_gate/us':>10} {'transport/us':>13} {'rate/s':>10}")
    for k in kinds:
        kind = gates.GateKind.COLLISIONAL if k == "collisional" else gates.GateKind.RYDBERG
        t_gate = args.t_gate_us * 1e-6 if args.t_gate_us is not None else gates.gate_duration(kind)
        rate = sim.analytic_rate(t_gate, args.transport_us * 1e-6, args.overhead_us * 1e-6)
        print(f"{k:<12} {t_gate * 1e6:>10.4g} {args.transport_us:>13.4g} {rate:>10.0f}")
        rows.append(f"{k},{t_gate!r},{args.transport_us * 1e-6!r},{rate!r}")
    out = _outdir(args) / "rate.csv"
    out.write_text("gate,t_gate,t_transport,rate\n" + "\n".join(rows) + "\n")
    man.add(out)


def _load_config(path: str) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def cmd_simulate(args, man: RunManifest):
    doc = _load_config(args.config)
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.duration_limit_s is not None:
        doc["duration_limit"] = args.duration_limit_s
    try:
        cfg = sim.config_from_dict(doc)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{args.config}: {exc}") from exc
    man.config = str(args.config)
    man.seed = cfg.seed
    m = sim.run(cfg)
    print(f"delivered pairs    {m.delivered_pairs} of {m.submitted} ({m.rejected} rejected)")
    print(f"elapsed            {m.elapsed * 1e3:.6g} ms")
    print(f"throughput         {m.throughput:.6g} pairs/s")
    print(f"mean latency       {m.mean_latency * 1e6:.6g} us (p95 {m.p95_latency * 1e6:.6g} us)")
    print(f"pair fidelity      {m.mean_pair_fidelity:.10f}")
    for mid, u in sorted(m.messenger_utilization.items()):
        print(f"messenger {mid:<8} utilization {u:.4f}")
    d = _outdir(args)
    m.write_json(d / "metrics.json")
    m.write_event_csv(d / "events.csv")
    m.write_trace_csv(d / "trace.csv")
    for name in ("metrics.json", "events.csv", "trace.csv"):
        man.add(d / name)


def cmd_reproduce_paper(args, man: RunManifest):
    results = acceptance.run_all()
    for r in results:
        print(r.line())
    ok = all(r.ok for r in results)
    out = _outdir(args) / "reproduce.json"
    out.write_text(json.dumps(
        [{"criterion": r.number, "name": r.name, "passed": r.ok, "detail": r.detail}
         for r in results], indent=2) + "\n")
    man.add(out)
    print("all criteria passed" if ok else "some criteria FAILED")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="atomlink", description=__doc__.splitlines()[0])
    parser.add_argument("--output-dir", help=f"artifact directory (default ${OUTPUT_ENV} or ./atomlink-out)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("trap", help="tweezer depth, frequencies and spill limit")
    p.add_argument("--power-mw", type=_nonneg("power"), default=250.0)
    p.add_argument("--waist-um", type=_positive("waist"), default=1.0)
    p.add_argument("--wavelength-nm", type=_positive("wavelength"), default=1064.0)
    p.add_argument("--species", default="Li6")
    p.add_argument("--polarizability-au", type=_positive("polarizability"))
    p.add_argument("--safety-factor", type=_positive("safety factor"), default=0.5)
    p.add_argument("--species-json", help="species table JSON to use instead of the built-in one")
    p.set_defaults(fn=cmd_trap)

    p = sub.add_parser("transport", help="minimum-time move plan and AOD waveform")
    p.add_argument("--distance-um", type=_nonneg("distance"), default=250.0)
    p.add_argument("--a-limit-m-s2", type=_positive("acceleration limit"),
                   help="default: safety factor x spill limit of the 10 mK Li-6 trap")
    p.add_argument("--v-limit-m-s", type=_positive("velocity limit"))
    p.add_argument("--profile", choices=[k.value for k in ProfileKind], default="BangBang")
    p.add_argument("--safety-factor", type=_positive("safety factor"), default=0.5)
    p.add_argument("--center-mhz", type=_positive("center frequency"), default=100.0)
    p.add_argument("--scale-um-per-mhz", type=_positive("scale"), default=2.5)
    p.set_defaults(fn=cmd_transport)

    p = sub.add_parser("charge-exchange", help="endo/exothermic charge exchange")
    p.add_argument("atom", nargs="?")
    p.add_argument("ion", nargs="?")
    p.add_argument("--species-json")
    p.add_argument("--export-species", help="write the species table to this JSON file")
    p.set_defaults(fn=cmd_charge_exchange)

    p = sub.add_parser("layout", help="pack ion-chain zones into the field of view")
    p.add_argument("--fov-mm", type=_positive("fov"), default=1.2)
    p.add_argument("--pitch-um", type=_positive("pitch"), default=250.0)
    p.add_argument("--num-ions", type=int, default=30)
    p.add_argument("--ion-spacing-um", type=_positive("ion spacing"), default=5.0)
    p.add_argument("--margin-um", type=_nonneg("margin"), default=10.0)
    p.set_defaults(fn=cmd_layout)

    p = sub.add_parser("verify-protocol", help="exact check of the messenger protocol")
    p.add_argument("--phase-rad", type=float, default=math.pi)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--depolarizing-p", type=_nonneg("p"), default=0.0)
    g.add_argument("--gate-fidelity", type=_positive("gate fidelity"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--correct", action="store_true", help="apply the X correction on outcome 1")
    p.add_argument("--mode", choices=["mixed", "pure"], default="mixed")
    p.add_argument("--amplitudes", action="store_true", help="include the ion state in the JSON")
    p.set_defaults(fn=cmd_verify_protocol)

    p = sub.add_parser("rate", help="analytic entanglement rate per gate kind")
    p.add_argument("--gate", choices=["collisional", "rydberg", "all"], default="all")
    p.add_argument("--transport-us", type=_nonneg("transport time"), default=50.0)
    p.add_argument("--t-gate-us", type=_positive("gate time"))
    p.add_argument("--overhead-us", type=_nonneg("overhead"), default=0.0)
    p.set_defaults(fn=cmd_rate)

    p = sub.add_parser("simulate", help="discrete-event run of a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--duration-limit-s", type=_positive("duration limit"))
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("reproduce-paper", help="check the headline numbers")
    p.set_defaults(fn=cmd_reproduce_paper)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc))
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    man = RunManifest(args.command, str(_outdir(args)))
    try:
        code = args.fn(args, man) or 0
    except (UsageError, ConfigurationError, ValueError, KeyError, FileNotFoundError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        sys.stderr.write(f"atomlink {args.command}: {msg}\n")
        return 1
    except Exception:
        log.exception("internal error")
        return 2
    man.write()
    return code


if __name__ == "__main__":
    sys.exit(main())
