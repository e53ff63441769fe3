import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", parent=settings.get_profile("default"), max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> list of (part, passed, detail), filled by test_acceptance
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}


def record(criterion: int, part: str, passed: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        detail = "; ".join(f"{name} {'ok' if ok else 'FAILED'} ({d})" for name, ok, d in parts)
        terminalreporter.write_line(f"criterion {crit:2d}: {status}  {detail}")
