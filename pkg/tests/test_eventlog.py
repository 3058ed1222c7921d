from hypothesis import given
from hypothesis import strategies as st

from stealthsim.simkit import EventLog
from stealthsim.simkit.eventlog import fmt_ms, _parse_ms

words = st.text(alphabet="abcdefghij_0123456789|:.", min_size=0, max_size=8)
records = st.lists(st.tuples(st.integers(0, 10**12), st.sampled_from(["snap", "round", "success"]),
                             st.integers(-1, 99), st.integers(-1, 99),
                             st.dictionaries(st.sampled_from(["a", "ref", "members"]), words, max_size=3)),
                   max_size=20)


@given(records)
def test_roundtrip_both_formats(recs):
    log = EventLog(meta={"scenario": "senack", "seed": "3"})
    for t, k, s, d, det in recs:
        log.add(t, k, s, d, **det)
    for fmt in ("csv", "jsonl"):
        back = EventLog.loads(log.dumps(fmt))
        assert back.records == log.records
        assert back.meta == log.meta


def test_ms_formatting():
    assert fmt_ms(300_001_096) == "300001.096"
    assert _parse_ms("300001.096") == 300_001_096
    assert _parse_ms(fmt_ms(-1500)) == -1500


def test_sort_is_stable(tmp_path):
    log = EventLog()
    log.add(5, "b")
    log.add(1, "a")
    log.add(5, "c")
    log.sort()
    assert [r.kind for r in log] == ["a", "b", "c"]
    log.write(tmp_path / "x.log")
    assert EventLog.read(tmp_path / "x.log").records == log.records
