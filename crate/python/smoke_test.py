"""Import the extension, lock the 011 detector, attack it and check the key."""

import json
import pathlib
import sys

import dfssd

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


def main() -> int:
    det = dfssd.Netlist.load(str(DATA / "detector011.bench"))
    assert (det.num_inputs, det.num_outputs, det.num_flipflops) == (1, 1, 2), det

    # 011 detector: output rises on the cycle the final 1 arrives.
    out = det.simulate(["0", "1", "1", "0", "1", "1"])
    print("detector", out)

    locked = dfssd.obfuscate(det, "df:2")
    print(locked.netlist, "key", locked.key, "bound", locked.bound)
    assert locked.bound == 4
    assert locked.netlist.equivalent(det, key=locked.key) is True
    json.loads(locked.summary_json())

    r = dfssd.attack(locked.netlist, locked.key, boundary_step=1)
    print(r)
    assert r.termination == "UC" and r.key == locked.key
    assert r.accepts(locked.key)
    assert json.loads(r.to_json())["schema"] == 1

    fsm = dfssd.Netlist.load(str(DATA / "five_state.kiss"))
    ssd = dfssd.obfuscate(fsm, "ssd:2")
    r = dfssd.attack(ssd.netlist, ssd.key)
    print("ssd:2", r)
    assert r.termination in ("CE", "UMC") and r.accepts(ssd.key)

    try:
        dfssd.obfuscate(det, "ssd:x")
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("bad scheme accepted")
    print("ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
