"""Smoke test for the quotient_py extension module."""

import json
import pathlib

import quotient_py

CORPUS = pathlib.Path(__file__).resolve().parent.parent / "corpus"


def main():
    counter = quotient_py.Object.from_file(str(CORPUS / "counter.qo"))
    assert counter.name == "counter"
    assert counter.methods == ["increment", "decrement"]

    kinds = [k for _, k, _ in counter.paths()]
    assert (kinds.count("local"), kinds.count("write")) == (3, 2)

    row = counter.synthesize()
    counts = [row[k] for k in ("states", "local", "write", "transitions", "layers")]
    assert counts == [2, 3, 2, 6, 5], counts
    assert row["unknown"] == 0
    automaton = row["automaton"]
    assert json.loads(automaton)["initial"]

    lp = (CORPUS / "counter.lp").read_text()
    verdict, stage, message = counter.check_lin(automaton, "counter", lp, ["increment,decrement", "increment,increment"])
    assert verdict == "yes", (verdict, stage, message)

    traces, bad = counter.brute_force(["increment,increment,decrement"], "counter")
    assert traces > 0 and bad == 0

    again = quotient_py.Object(counter.source())
    assert again.source() == counter.source()

    try:
        quotient_py.Object("object broken\nmethod m() returns int {\n  x := ;\n}\n")
    except ValueError as e:
        assert "syntax" in str(e)
    else:
        raise AssertionError("malformed source accepted")

    print("smoke test ok:", quotient_py.__version__)


if __name__ == "__main__":
    main()
