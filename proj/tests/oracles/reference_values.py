"""Reference values for the unit tests, computed with plain numpy.

Run: python3 tests/oracles/reference_values.py
"""
import numpy as np


def linear_schedule(T, b0, b1):
    betas = np.linspace(b0, b1, T)
    return betas, np.cumprod(1.0 - betas)


def htk_mel(hz):
    return 2595.0 * np.log10(1.0 + hz / 700.0)


def htk_hz(mel):
    return 700.0 * (10.0 ** (mel / 2595.0) - 1.0)


def mel_bank(sr, n_mels, n_fft):
    edges = htk_hz(np.linspace(0.0, htk_mel(sr / 2.0), n_mels + 2))
    freqs = np.arange(n_fft // 2 + 1) * sr / n_fft
    fb = np.zeros((n_mels, freqs.size))
    for m in range(n_mels):
        lo, mid, hi = edges[m:m + 3]
        up = (freqs - lo) / (mid - lo)
        down = (hi - freqs) / (hi - mid)
        fb[m] = np.where((freqs > lo) & (freqs <= mid), up, np.where((freqs > mid) & (freqs < hi), down, 0.0))
    return fb


def tone_argmax(freq, sr=16000, hop=640, win=1280, n_mels=80, seconds=1.0):
    t = np.arange(int(sr * seconds)) / sr
    x = np.sin(2 * np.pi * freq * t)
    fb = mel_bank(sr, n_mels, win)
    hann = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(win) / win)
    out = []
    for l in range(len(x) // hop):
        start = l * hop + hop // 2 - win // 2
        seg = np.zeros(win)
        for i in range(win):
            j = start + i
            if 0 <= j < len(x):
                seg[i] = x[j] * hann[i]
        p = np.abs(np.fft.rfft(seg)) ** 2
        out.append(int(np.argmax(fb @ p)))
    return out


def main():
    _, ab = linear_schedule(3, 0.1, 0.3)
    print("alpha_bars(3, 0.1, 0.3) =", ab)
    sab = 0.5
    print("forward_diffuse =", sab * np.array([1.0, -1.0]) + np.sqrt(1 - sab**2) * np.array([1.0, 1.0]))
    a, abar, xt, eps = 0.8, 0.72, 1.0, 0.5
    print("posterior_mean =", (xt - (1 - a) / np.sqrt(1 - abar) * eps) / np.sqrt(a))
    print("posterior_variance t=2 =", (1 - ab[0]) / (1 - ab[1]) * 0.2)
    ab4 = np.array([0.9, 0.72, 0.504, 0.3024])
    sub = ab4[[1, 3]]
    print("subsampled betas =", [1 - sub[0], 1 - sub[1] / sub[0]])
    f = np.array([1.0, 2.0, 3.0])
    print("layer_norm [1,2,3] =", (f - f.mean()) / np.sqrt(f.var() + 1e-5))
    print("interferer scale at +10 dB =", 10 ** (-10 / 20))
    s, e = np.array([1.0, 0.0]), np.array([1.0, 1.0])
    alpha = e @ s / (s @ s)
    print("si_sdr([1,1],[1,0]) =", 10 * np.log10(np.sum((alpha * s) ** 2) / np.sum((e - alpha * s) ** 2)))
    print("E|N(0,1)| =", np.sqrt(2 / np.pi))
    bins = tone_argmax(440.0)
    print("440 Hz argmax mel bins =", sorted(set(bins[1:-1])), "interior frames:", len(bins) - 2)


if __name__ == "__main__":
    main()
