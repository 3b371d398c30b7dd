"""CSV loading with manifest and header validation.

Every table the simulator CLI writes opens with one comment line:

    # manifest schema=<name>/v1 config_sha=<hex> seed=<int> deterministic=<bool> [key=value ...]

A table is only handed to a renderer after its declared schema name,
schema version, and column header all match what the figure kind expects;
any mismatch is reported with the offending name.
"""

import csv
from dataclasses import dataclass

import numpy as np


class SchemaError(Exception):
    """Input table missing, malformed, or of the wrong schema."""


SCHEMA_VERSION = "v1"

# column layouts by schema name; hamming-matrix has one column per protocol,
# so only its leading column is fixed
COLUMNS = {
    "run-summary": ["beta", "scheme", "E", "fidelity", "P_gs", "eps_alg_final"],
    "qite-trace": ["k", "term_label", "energy", "alg_error", "fidelity"],
    "learning-curve": ["iteration", "mean_reward", "best_E", "wall_time_s"],
    "scaling": ["N", "beta", "E_std", "E_RL", "ratio", "F_std", "F_RL"],
    "hamming-matrix": None,
}


@dataclass
class Table:
    path: str
    schema: str
    manifest: dict
    header: list
    rows: list

    def column(self, name: str, cast=float) -> np.ndarray:
        """One column across all rows, cast elementwise."""
        if name not in self.header:
            raise SchemaError(f"{self.path}: no column '{name}'")
        idx = self.header.index(name)
        return np.array([cast(row[idx]) for row in self.rows])


def parse_manifest(path: str, line: str) -> tuple[str, dict]:
    if not line.startswith("# manifest "):
        raise SchemaError(f"{path}: first line is not a manifest comment")
    fields = {}
    for token in line[len("# manifest "):].split():
        if "=" not in token:
            raise SchemaError(f"{path}: malformed manifest token '{token}'")
        key, value = token.split("=", 1)
        fields[key] = value
    for key in ("schema", "config_sha", "seed", "deterministic"):
        if key not in fields:
            raise SchemaError(f"{path}: manifest is missing '{key}'")
    declared = fields.pop("schema")
    name, _, version = declared.partition("/")
    if version != SCHEMA_VERSION:
        raise SchemaError(
            f"{path}: schema version '{version or declared}', expected {SCHEMA_VERSION}"
        )
    return name, fields


def check_header(path: str, schema: str, header: list) -> None:
    expected = COLUMNS[schema]
    if expected is None:
        if not header or header[0] != "protocol":
            raise SchemaError(f"{path}: expected leading column 'protocol'")
        return
    if header == expected:
        return
    for col in expected:
        if col not in header:
            raise SchemaError(f"{path}: missing column '{col}'")
    for col in header:
        if col not in expected:
            raise SchemaError(f"{path}: unexpected column '{col}'")
    raise SchemaError(f"{path}: column order {header}, expected {expected}")


def load_table(path: str, expected_schema: str) -> Table:
    """Read one CSV, insisting it declares the given schema."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            first = fh.readline().rstrip("\n")
            name, manifest = parse_manifest(path, first)
            if name != expected_schema:
                raise SchemaError(
                    f"{path}: schema '{name}', expected '{expected_schema}'"
                )
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise SchemaError(f"{path}: missing column header")
            check_header(path, expected_schema, header)
            rows = [row for row in reader if row]
    except OSError as exc:
        raise SchemaError(f"{path}: {exc.strerror or 'cannot read file'}") from None
    for row in rows:
        if len(row) != len(header):
            raise SchemaError(
                f"{path}: row has {len(row)} cells, header has {len(header)}"
            )
    return Table(path=path, schema=expected_schema, manifest=manifest,
                 header=header, rows=rows)
