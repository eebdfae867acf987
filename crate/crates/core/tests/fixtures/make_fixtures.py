"""Regenerates the test fixtures in this directory.

corpus/*.png    grayscale public-domain images from scikit-image, longest side <= 384
svr_model.json  small RBF-SVR fitted with scikit-learn on synthetic 36-d rows
wavs_db6.json   reference db6 detail statistics from PyWavelets
"""
import json
import os

import numpy as np
import pywt
import skimage.data as data
from PIL import Image
from sklearn.svm import SVR

HERE = os.path.dirname(os.path.abspath(__file__))

CORPUS = [
    "astronaut", "camera", "coins", "coffee", "chelsea", "moon", "page", "text",
    "rocket", "hubble_deep_field", "immunohistochemistry", "brick", "grass",
    "gravel", "clock", "cell", "retina",
]


def gray_u8(img):
    img = np.asarray(img)
    if img.ndim == 3:
        img = img[..., :3].astype(np.float64)
        img = 0.299 * img[..., 0] + 0.587 * img[..., 1] + 0.114 * img[..., 2]
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def shrink(img, longest=384):
    h, w = img.shape
    s = longest / max(h, w)
    if s >= 1:
        return img
    size = (max(1, round(w * s)), max(1, round(h * s)))
    return np.asarray(Image.fromarray(img).resize(size, Image.LANCZOS))


def corpus():
    out = os.path.join(HERE, "corpus")
    os.makedirs(out, exist_ok=True)
    images = {n: getattr(data, n)() for n in CORPUS}
    left, right, _ = data.stereo_motorcycle()
    images["motorcycle_left"] = left
    images["motorcycle_right"] = right
    full = gray_u8(data.retina())
    c = full.shape[0] // 2
    images["retina_detail"] = full[c - 192:c + 192, c - 192:c + 192]
    for name, img in images.items():
        Image.fromarray(shrink(gray_u8(img))).save(os.path.join(out, f"{name}.png"))


def svr_model():
    rng = np.random.default_rng(7)
    x = rng.uniform(-1.0, 1.0, size=(60, 36))
    y = 40.0 + 15.0 * np.tanh(x[:, 0] + 0.5 * x[:, 1] - x[:, 2]) + rng.normal(0, 1, 60)
    feature_min = rng.uniform(-3.0, 0.0, 36)
    feature_max = feature_min + rng.uniform(0.5, 4.0, 36)
    gamma = 0.05
    m = SVR(kernel="rbf", gamma=gamma, C=10.0, epsilon=0.5).fit(x, y)
    query_raw = feature_min + (rng.uniform(-1, 1, 36) + 1.0) / 2.0 * (feature_max - feature_min)
    query = 2.0 * (query_raw - feature_min) / (feature_max - feature_min) - 1.0
    model = {
        "gamma": gamma,
        "rho": float(-m.intercept_[0]),
        "feature_min": feature_min.tolist(),
        "feature_max": feature_max.tolist(),
        "sv": m.support_vectors_.tolist(),
        "sv_coef": m.dual_coef_[0].tolist(),
        "reference": {
            "features": query_raw.tolist(),
            "score": float(m.predict(query[None, :])[0]),
        },
    }
    with open(os.path.join(HERE, "svr_model.json"), "w") as f:
        json.dump(model, f, indent=1)
        f.write("\n")


def wavs_reference():
    h, w = 24, 32
    yy, xx = np.mgrid[0:h, 0:w]
    img = ((xx * 7 + yy * 13) % 17) * 3.0 + np.sin(xx * 0.7) * 20.0 + (yy % 5) * yy
    out = {"width": w, "height": h, "pixels": img.ravel().tolist()}
    for wav in ["db6", "haar"]:
        _, (lh, hl, hh) = pywt.dwt2(img, wav, mode="periodization")
        detail = np.concatenate([np.abs(lh).ravel(), np.abs(hl).ravel(), np.abs(hh).ravel()])
        out[wav] = {"mean_abs_detail": float(detail.mean()), "hh_00": float(hh[0, 0])}
    with open(os.path.join(HERE, "wavs_reference.json"), "w") as f:
        json.dump(out, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    corpus()
    svr_model()
    wavs_reference()
