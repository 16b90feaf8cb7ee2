#!/usr/bin/env python3
# Copyright Contributors to the viewforge project
# SPDX-License-Identifier: Apache-2.0
"""Validates example configs and workspace outputs against schemas/.

Usage: validate_schemas.py SCHEMA_DIR --config FILE... [--workspace DIR]
"""

import argparse
import json
import pathlib
import sys

import jsonschema
from referencing import Registry, Resource


def load(path):
    with open(path) as f:
        return json.load(f)


def make_registry(schema_dir):
    resources = []
    for path in sorted(schema_dir.glob("*.schema.json")):
        schema = load(path)
        resource = Resource.from_contents(schema)
        resources.append((schema["$id"], resource))
        resources.append((path.name, resource))
    return Registry().with_resources(resources)


def validator(schema_dir, registry, name):
    schema = load(schema_dir / name)
    cls = jsonschema.validators.validator_for(schema)
    cls.check_schema(schema)
    return cls(schema, registry=registry)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("schema_dir", type=pathlib.Path)
    parser.add_argument("--config", nargs="+", default=[])
    parser.add_argument("--workspace", type=pathlib.Path)
    args = parser.parse_args()

    registry = make_registry(args.schema_dir)
    checks = [(validator(args.schema_dir, registry, "config.schema.json"), pathlib.Path(c)) for c in args.config]
    if args.workspace:
        ws = args.workspace
        for name, rel in [
            ("poses.schema.json", "trajectory.json"),
            ("poses.schema.json", "holdout.json"),
            ("plan.schema.json", "plan.json"),
            ("manifest.schema.json", "views/manifest.json"),
            ("training.schema.json", "training.json"),
            ("report.schema.json", "report.json"),
        ]:
            checks.append((validator(args.schema_dir, registry, name), ws / rel))

    failures = 0
    for v, path in checks:
        errors = sorted(v.iter_errors(load(path)), key=lambda e: list(e.path))
        for e in errors:
            print(f"{path}: {'/'.join(map(str, e.path)) or '$'}: {e.message}")
        failures += bool(errors)

    # The schemas must also reject what the parser rejects.
    config = validator(args.schema_dir, registry, "config.schema.json")
    for bad in ({"recon": {"iteratons": 5}}, {"mode": "all_at_once"}, {"trajectory": {}}, {"sampler": {"steps": 0}}):
        if config.is_valid(bad):
            print(f"config schema accepted invalid document {bad}")
            failures += 1

    print(f"{len(checks)} documents checked, {failures} failures")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
