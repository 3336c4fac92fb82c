"""Regenerate the binary test fixtures (stdlib wave only, independent of the package)."""
import json
import struct
import wave
from pathlib import Path

import numpy as np
from scipy import stats

HERE = Path(__file__).parent


def write(name, pcm, rate, channels=1):
    with wave.open(str(HERE / name), "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(2)
        wf.setframerate(rate)
        wf.writeframes(np.asarray(pcm, dtype="<i2").tobytes())


rng = np.random.default_rng(20230601)
t = np.arange(16000) / 16000
write("tone_16k.wav", np.round(12000 * np.sin(2 * np.pi * 440 * t)), 16000)
write("noise_8k.wav", rng.integers(-20000, 20000, 1001), 8000)
write("extremes_16k.wav", [-32768, -32767, -1, 0, 1, 32766, 32767] * 10, 16000)
write("masker_16k.wav", np.round(rng.normal(0, 3000, 4000)).clip(-32768, 32767), 16000)
write("stereo_16k.wav", rng.integers(-1000, 1000, 200), 16000, channels=2)

# IEEE float WAV (format tag 3)
data = np.zeros(100, dtype="<f4").tobytes()
fmt = struct.pack("<HHIIHH", 3, 1, 16000, 64000, 4, 32)
body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", len(data)) + data
(HERE / "float_16k.wav").write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)

# header claims more frames than present
full = (HERE / "tone_16k.wav").read_bytes()
(HERE / "truncated_16k.wav").write_bytes(full[:44 + 1000])

# paired t-test reference values from scipy.stats.ttest_rel
sets = []
for n in (10, 17, 25, 38, 50):
    a = np.round(rng.gamma(2.0, 0.1, n), 6)
    b = np.round(np.clip(a + rng.normal(0.03, 0.08, n), 0, None), 6)
    res = stats.ttest_rel(a, b)
    sets.append({"a": a.tolist(), "b": b.tolist(), "t": float(res.statistic),
                 "p": float(res.pvalue), "dof": n - 1})
(HERE / "ttest_reference.json").write_text(json.dumps(sets, indent=1) + "\n")
