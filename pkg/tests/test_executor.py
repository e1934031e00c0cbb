from __future__ import annotations

import io
import struct

import pytest

from helpers import REFCORPUS_CMD
from mudep import executor, refcorpus
from mudep.errors import LoadError
from mudep.typesys import NULL, VArr, VInt32, VRec, VStr, cmp, STRING


def test_load_twelve_entry_manifest(corpus_sigs, reg):
    manifest = list(corpus_sigs.values())[:12]
    with executor.load(executor.SubprocessBackend(REFCORPUS_CMD), manifest, reg) as h:
        assert len(h.functions()) == 12


def test_load_reports_missing_function(corpus_sigs, reg):
    ghost = executor.FunctionSig("no_such_fn", True, None, (), None)
    with pytest.raises(LoadError) as err:
        executor.load(executor.SubprocessBackend(REFCORPUS_CMD),
                      [corpus_sigs["id_int32"], ghost], reg)
    assert "no_such_fn" in str(err.value)


def test_load_empty_manifest(reg):
    h = executor.load(executor.SubprocessBackend(REFCORPUS_CMD), [], reg)
    assert h.functions() == []
    h.close()


def test_invoke_identity(corpus_handle, corpus_sigs):
    resp = corpus_handle.invoke(corpus_sigs["id_int32"], [VInt32(5)])
    assert resp.ok
    assert cmp(resp.ret, VInt32(5))
    assert cmp(resp.args_post[0], VInt32(5))


def test_invoke_reflects_argument_writes(corpus_handle, corpus_sigs):
    # Corpus function with a known body: writes arg1 into arg0.v
    holder = VRec("Holder", {"v": VStr("")})
    resp = corpus_handle.invoke(corpus_sigs["Java_com_ex_setarg_Main_set"],
                                [holder, VStr("imei-123")])
    assert resp.ok
    assert resp.args_post[0].fields["v"].v == "imei-123"
    assert holder.fields["v"].v == ""  # responses never alias request memory


def test_invoke_timeout_and_recovery(corpus_handle, corpus_sigs):
    resp = corpus_handle.invoke(corpus_sigs["hang_forever"], [VInt32(1)], budget=0.1)
    assert resp.status == "timeout"
    resp = corpus_handle.invoke(corpus_sigs["id_int32"], [VInt32(9)])
    assert resp.ok and resp.ret.v == 9


def test_invoke_crash_is_fault_not_fatal(corpus_handle, corpus_sigs):
    resp = corpus_handle.invoke(corpus_sigs["crash_now"], [VInt32(1)], budget=2.0)
    assert resp.status == "fault"
    resp = corpus_handle.invoke(corpus_sigs["id_int32"], [VInt32(3)])
    assert resp.ok and resp.ret.v == 3


def test_noop_roundtrip(corpus_handle, corpus_sigs):
    data = VRec("Data", {"s": VStr("payload")})
    resp = corpus_handle.invoke(corpus_sigs["noop_data"], [data])
    assert resp.ok and resp.ret is None
    assert cmp(resp.args_post[0], data)


def test_deterministic_function_reproduces(corpus_handle, corpus_sigs):
    a = corpus_handle.invoke(corpus_sigs["sum_pair"], [VInt32(20), VInt32(22)])
    b = corpus_handle.invoke(corpus_sigs["sum_pair"], [VInt32(20), VInt32(22)])
    assert a.ok and b.ok and cmp(a.ret, b.ret) and a.ret.v == 42


def test_unknown_function_is_fault(corpus_handle):
    ghost = executor.FunctionSig("nope", True, None, (), None)
    resp = corpus_handle.invoke(ghost, [])
    assert resp.status == "fault"


def test_arrays_cross_the_wire(corpus_handle, corpus_sigs):
    arr = VArr(STRING, [VStr("u"), VStr("v")])
    resp = corpus_handle.invoke(corpus_sigs["Java_com_ex_noleakarr_Main_pick"],
                                [VStr("secret"), arr])
    assert resp.ok and resp.ret.v == "v"


def test_frame_codec_roundtrip():
    payload = {"function": "f", "args": [{"kind": "int32", "value": 1}]}
    assert executor.decode_frame(executor.encode_frame(payload)) == payload


def test_malformed_frame_gets_fault_response():
    garbage = struct.pack("<I", 7) + b"not json"[:7]
    out = io.BytesIO()
    refcorpus.serve(io.BytesIO(garbage), out)
    body = out.getvalue()
    (n,) = struct.unpack("<I", body[:4])
    assert b'"fault"' in body[4:4 + n]


def test_fuzzed_frames_do_not_poison_state(corpus_handle, corpus_sigs):
    # Well-framed garbage payloads must fault without breaking later calls.
    import random
    rng = random.Random(99)
    for _ in range(20):
        junk = bytes(rng.randrange(0, 256) for _ in range(rng.randrange(1, 64)))
        status, _, _ = corpus_handle._transport.roundtrip(
            struct.pack("<I", len(junk)) + junk, 2.0)
        assert status in ("ok", "fault")
    resp = corpus_handle.invoke(corpus_sigs["sum_pair"], [VInt32(1), VInt32(2)])
    assert resp.ok and resp.ret.v == 3
