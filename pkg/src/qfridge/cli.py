"""Command-line entry point.

    qfridge <scenario|preset> [--config PATH] [--out DIR] [--plot] [--jobs N]
            [--override key=value ...]

A preset name loads the shipped preset document; ``--config`` then overlays
it. A scenario name with ``--config`` forces that scenario on the document;
without ``--config`` it falls back to the preset of the same name, if any.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import (
    DEFAULTS, SCENARIOS, ConfigError, apply_override, build_config, list_presets,
    load_document, merge, preset_text,
)
from .scenarios import EXIT_CONFIG, run_scenario

log = logging.getLogger("qfridge")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qfridge",
        description="Two-qubit quantum Otto refrigerator with correlated bath noise.",
    )
    ap.add_argument("target", help=f"scenario ({', '.join(SCENARIOS)}), preset name, or 'list'")
    ap.add_argument("--config", help="YAML config document")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--plot", action="store_true", help="also write SVG figures")
    ap.add_argument("--jobs", type=int, default=1,
                    help="worker processes for sweep points (0 = all cores)")
    ap.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                    help="dotted config key, e.g. system.delta=0.2 or chi=[0,1]")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def resolve(args) -> tuple:
    """Return (ScenarioConfig, source description)."""
    doc = {}
    forced = args.target in SCENARIOS and (args.config or args.target not in list_presets())
    if forced:
        if not args.config:
            raise ConfigError(f"scenario {args.target!r} needs --config")
        source = args.config
    else:
        doc = load_document(preset_text(args.target), f"preset {args.target}")
        source = f"preset:{args.target}"
    if args.config:
        try:
            text = open(args.config).read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        doc = merge(doc, load_document(text, args.config))
        if not forced:
            source += f"+{args.config}"
    if forced:
        doc["scenario"] = args.target
    doc = merge(DEFAULTS, doc)
    for item in args.override:
        doc = apply_override(doc, item)
    return build_config(doc), source


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.target == "list":
        print("\n".join(list_presets()))
        return 0
    try:
        cfg, source = resolve(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    jobs = args.jobs if args.jobs > 0 else (os.cpu_count() or 1)
    result = run_scenario(cfg, out_dir=args.out, jobs=jobs, plot=args.plot or None,
                          source=source)
    for path in result.files:
        print(path)
    for fail in result.failures:
        print(f"numerical failure: {fail}", file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
