"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
RESULTS = {}


def record(k, ok, detail):
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[k] = line
    print(line)
    return line
