"""Time-tag streams and their on-disk format.

A stream is what a counting module records on one input channel: integer
picosecond timestamps on a shared experiment clock.  Integers keep tag
comparisons and dead-time checks exact.

File format (the contract between the event simulator and the analysis
stage)::

    # timetag v1
    # duration_ps 60000000000000
    0,12345
    1,12350
    ...

Rows are ``channel,timestamp_ps`` sorted globally by timestamp.  Channel
ids: 0 = signal/herald, 1 = idler (splitter arm B), 2 = splitter arm C.
The ``duration_ps`` header line carries the recording length so a
write/read round trip is lossless even when the last tag arrives early.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

PS_PER_S = 1_000_000_000_000

CHANNEL_SIGNAL = 0
CHANNEL_IDLER = 1
CHANNEL_IDLER_C = 2


def to_ps(seconds: float) -> int:
    """Convert seconds to integer picoseconds (nearest)."""
    return int(round(seconds * PS_PER_S))


@dataclass(frozen=True)
class TimeTagStream:
    """Ordered detection events on one channel.

    timestamps: int64 picoseconds, non-decreasing, all within
    [0, duration_ps].
    """

    channel: int
    timestamps: np.ndarray
    duration_ps: int

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        if ts.ndim != 1:
            raise ValueError("timestamps must be a 1-d array")
        if self.duration_ps < 0:
            raise ValueError(f"duration_ps must be non-negative, got {self.duration_ps}")
        if ts.size:
            if np.any(np.diff(ts) < 0):
                raise ValueError("timestamps must be non-decreasing")
            if ts[0] < 0 or ts[-1] > self.duration_ps:
                raise ValueError("timestamps must lie within [0, duration_ps]")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "duration_ps", int(self.duration_ps))

    def __len__(self) -> int:
        return int(self.timestamps.size)

    @property
    def duration(self) -> float:
        """Recording length [s]."""
        return self.duration_ps / PS_PER_S

    @property
    def rate(self) -> float:
        """Mean tag rate [events/s]."""
        if self.duration_ps == 0:
            return 0.0
        return self.timestamps.size / self.duration


def write_timetags(streams, fileobj=None) -> str:
    """Serialize one or more streams to the v1 text format.

    Rows from all channels are merged and globally sorted by timestamp
    (ties broken by channel id).  Returns the text; also writes to
    ``fileobj`` when given.
    """
    streams = list(streams)
    if not streams:
        raise ValueError("need at least one stream")
    durations = {s.duration_ps for s in streams}
    if len(durations) != 1:
        raise ValueError("all streams must share one recording duration")
    channels = [s.channel for s in streams]
    if len(set(channels)) != len(channels):
        raise ValueError("duplicate channel ids")
    ts = np.concatenate([s.timestamps for s in streams])
    ch = np.concatenate([np.full(len(s), s.channel, dtype=np.int64) for s in streams])
    order = np.lexsort((ch, ts))
    buf = io.StringIO()
    buf.write("# timetag v1\n")
    buf.write(f"# duration_ps {durations.pop()}\n")
    for c, t in zip(ch[order], ts[order]):
        buf.write(f"{c},{t}\n")
    text = buf.getvalue()
    if fileobj is not None:
        fileobj.write(text)
    return text


def read_timetags(text: str) -> dict[int, TimeTagStream]:
    """Parse the v1 text format back into per-channel streams."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != "# timetag v1":
        raise ValueError("missing '# timetag v1' header")
    duration_ps = None
    body_start = 1
    for i, ln in enumerate(lines[1:], start=1):
        ln = ln.strip()
        if not ln.startswith("#"):
            body_start = i
            break
        if ln.startswith("# duration_ps"):
            duration_ps = int(ln.split()[-1])
        body_start = i + 1
    chans: list[int] = []
    times: list[int] = []
    for ln in lines[body_start:]:
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        c, t = ln.split(",")
        chans.append(int(c))
        times.append(int(t))
    ch = np.asarray(chans, dtype=np.int64)
    ts = np.asarray(times, dtype=np.int64)
    if duration_ps is None:
        duration_ps = int(ts.max()) if ts.size else 0
    out = {}
    for c in np.unique(ch) if ch.size else []:
        sel = np.sort(ts[ch == c])
        out[int(c)] = TimeTagStream(int(c), sel, duration_ps)
    return out
