"""Handler for the oracle check suite."""

from typing import Any, Callable, Dict


def handle_check(
    settings: Dict[str, Any],
    options: Dict[str, Any],
    progress_callback: Callable[[int, str], None]
) -> Dict[str, Any]:
    """
    Run every oracle check on the desk-scale check scenario.

    Settings override the check defaults key by key.

    Returns:
        {"passed": bool, "results": [{"name", "passed", "measured", "threshold", "detail"}]}
    """
    from src.harness.oracles import run_checks

    report = run_checks(settings, progress_callback, only=options.get("only"))
    progress_callback(100, "Checks complete")

    return {
        "passed": report.passed,
        "results": [result.model_dump() for result in report.results],
    }
