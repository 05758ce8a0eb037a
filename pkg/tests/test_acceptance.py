"""Every acceptance criterion at its stated tolerance; one PASS/FAIL line each."""

import pytest

from weakrec import acceptance


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number, capsys):
    result = acceptance.CRITERIA[number]()
    with capsys.disabled():
        print(f"\n{result.line()}")
    assert result.passed, result.detail


def test_full_grid_via_cli(capsys):
    from weakrec.cli import main

    code = main(["verify-all"])
    _, err = capsys.readouterr()
    lines = [ln for ln in err.splitlines() if ln.startswith("[")]
    assert code == 0 and len(lines) == 8 and all(ln.startswith("[PASS]") for ln in lines)
