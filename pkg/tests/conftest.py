import numpy as np

from qfridge.baths import Bath

FIG5 = dict(delta=0.3, g=0.25)


def fig4_baths():
    return (Bath("cold", theta=0.05, w_res=0.1, quality=10.0),
            Bath("hot", theta=0.2, w_res=0.1, quality=10.0))


def fig5_baths():
    return (Bath("cold", theta=0.3, w_res=0.6, quality=10.0),
            Bath("hot", theta=0.3, w_res=2.0 * np.sqrt(0.25 + 0.09), quality=10.0))


# -- acceptance summary --------------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} | {detail}")
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} | {detail}")
