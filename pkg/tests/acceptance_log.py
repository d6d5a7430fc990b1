"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

LINES = []


def report(criterion, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {criterion}: {detail}"
    LINES.append(line)
    print(line)
    return passed
