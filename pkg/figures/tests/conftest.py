"""Shared helpers for the figures tests."""


def write_table(path, schema, header, rows, extras=""):
    """Write a CSV in the simulator's manifest-plus-header format."""
    lines = [
        f"# manifest schema={schema}/v1 config_sha=0123456789ab"
        f" seed=0 deterministic=true{extras}"
    ]
    lines.append(",".join(header))
    lines.extend(",".join(str(cell) for cell in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)
