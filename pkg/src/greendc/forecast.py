"""Solar irradiance forecasting, PV conversion and request prediction."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.svm import SVR

from .errors import GreenDCError

IRRADIANCE_HEADER = ["timestamp_iso8601", "ghi_w_m2"]

# share of panel rating below which predicted power counts as "no renewables"
AVAILABILITY_THRESHOLD = 0.01


class ForecastError(GreenDCError):
    pass


class InsufficientData(ForecastError):
    pass


class EmptyWindow(ForecastError):
    pass


@dataclass(frozen=True)
class IrradianceRecord:
    timestamp: int  # hours since the first record
    irradiance: float
    hour_of_day: int = 0

    def __post_init__(self):
        if self.irradiance < 0:
            raise ValueError("irradiance must be >= 0")


def load_irradiance(path: str | Path) -> list[IrradianceRecord]:
    """Read an hourly ``timestamp_iso8601,ghi_w_m2`` CSV.

    Negative readings (sensor noise at night) are clipped to zero.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != IRRADIANCE_HEADER:
            raise ForecastError(f"{path}:1: expected header {','.join(IRRADIANCE_HEADER)}")
        records = []
        t0 = None
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                ts = datetime.fromisoformat(row[0].strip())
                ghi = float(row[1])
            except (ValueError, IndexError):
                raise ForecastError(f"{path}:{lineno}: malformed row") from None
            if t0 is None:
                t0 = ts
            hours = int(round((ts - t0).total_seconds() / 3600.0))
            if records and hours != records[-1].timestamp + 1:
                raise ForecastError(f"{path}:{lineno}: records must be consecutive hours")
            records.append(IrradianceRecord(hours, max(ghi, 0.0), ts.hour))
    if not records:
        raise ForecastError(f"{path}: no data rows")
    return records


def write_irradiance(path: str | Path, values: Sequence[float], start: datetime) -> None:
    from datetime import timedelta

    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(IRRADIANCE_HEADER)
        for i, v in enumerate(values):
            w.writerow([(start + timedelta(hours=i)).isoformat(), f"{v:.2f}"])


def _features(hours: np.ndarray, lag1: np.ndarray, lag24: np.ndarray) -> np.ndarray:
    ang = 2.0 * np.pi * hours / 24.0
    return np.column_stack([np.sin(ang), np.cos(ang), lag1, lag24])


def median_gamma(X: np.ndarray) -> float:
    """RBF width from the median-distance heuristic: gamma = 1 / median(|xi - xj|^2)."""
    diff = X[:, None, :] - X[None, :, :]
    sq = np.sum(diff * diff, axis=-1)
    iu = np.triu_indices(len(X), k=1)
    med = float(np.median(sq[iu])) if len(iu[0]) else 1.0
    return 1.0 / med if med > 0 else 1.0


def r2_score(y: np.ndarray, pred: np.ndarray) -> float:
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        return math.nan
    return 1.0 - float(np.sum((y - pred) ** 2)) / ss_tot


def pearson_r(y: np.ndarray, pred: np.ndarray) -> float:
    if np.std(y) == 0 or np.std(pred) == 0:
        return math.nan
    return float(np.corrcoef(y, pred)[0, 1])


@dataclass
class SolarModel:
    """Fitted irradiance regressor plus the state needed to roll it forward."""

    svr: SVR | None
    C: float
    epsilon_tube: float
    gamma: float
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    y_scale: float
    last_day: np.ndarray  # last 24 observed hourly values, oldest first
    next_hour: int  # hour of day following the training history

    def _predict_scaled(self, X: np.ndarray) -> np.ndarray:
        if self.svr is None:
            return np.full(len(X), self.y_mean)
        Z = (X - self.x_mean) / self.x_scale
        return self.svr.predict(Z) * self.y_scale + self.y_mean

    def predict_features(self, X: np.ndarray) -> np.ndarray:
        return np.maximum(self._predict_scaled(X), 0.0)

    def predict_hours(self, n_hours: int) -> np.ndarray:
        """Roll the model forward ``n_hours`` past the end of its history."""
        window = list(self.last_day)
        out = np.empty(n_hours)
        for i in range(n_hours):
            hour = (self.next_hour + i) % 24
            x = _features(np.array([hour]), np.array([window[-1]]), np.array([window[-24]]))
            y = float(self.predict_features(x)[0])
            out[i] = y
            window.append(y)
        return out


@dataclass(frozen=True)
class TrainReport:
    r2: float
    r: float
    n_train: int
    n_test: int


def train_solar_model(
    history: Sequence[IrradianceRecord] | Sequence[float],
    split: float = 0.8,
    C: float = 4.0,
    epsilon_tube: float = 0.0,
    gamma: float | None = None,
) -> tuple[SolarModel, TrainReport]:
    """Fit an epsilon-insensitive RBF regressor on hourly irradiance.

    Features are cyclic hour-of-day plus the values 1 h and 24 h earlier.
    Both inputs and target are standardized before fitting.  The last
    ``1 - split`` of the samples are held out for R^2 and Pearson r.
    """
    if not 0.0 < split < 1.0:
        raise ValueError("split must be in (0, 1)")
    if len(history) < 48:
        raise InsufficientData(f"need at least 48 hourly records, got {len(history)}")
    if isinstance(history[0], IrradianceRecord):
        y_all = np.array([r.irradiance for r in history], dtype=float)
        hours_all = np.array([r.hour_of_day for r in history], dtype=float)
    else:
        y_all = np.asarray(history, dtype=float)
        hours_all = np.arange(len(y_all), dtype=float) % 24
    idx = np.arange(24, len(y_all))
    X = _features(hours_all[idx], y_all[idx - 1], y_all[idx - 24])
    y = y_all[idx]
    n_train = int(round(split * len(y)))
    n_train = min(max(n_train, 1), len(y) - 1)
    X_tr, y_tr, X_te, y_te = X[:n_train], y[:n_train], X[n_train:], y[n_train:]

    x_mean = X_tr.mean(axis=0)
    x_scale = X_tr.std(axis=0)
    x_scale[x_scale == 0] = 1.0
    y_mean = float(y_tr.mean())
    y_scale = float(y_tr.std())
    next_hour = int((hours_all[-1] + 1) % 24)
    if y_scale == 0:
        svr = None
        g = gamma if gamma is not None else 1.0
        y_scale = 1.0
    else:
        Z = (X_tr - x_mean) / x_scale
        g = gamma if gamma is not None else median_gamma(Z)
        svr = SVR(kernel="rbf", C=C, epsilon=epsilon_tube, gamma=g, tol=1e-4)
        svr.fit(Z, (y_tr - y_mean) / y_scale)
    model = SolarModel(svr, C, epsilon_tube, g, x_mean, x_scale, y_mean, y_scale, y_all[-24:].copy(), next_hour)
    pred = model.predict_features(X_te)
    return model, TrainReport(r2_score(y_te, pred), pearson_r(y_te, pred), n_train, len(y_te))


def irradiance_to_watts(irradiance, panel_kw: float, efficiency: float = 1.0):
    """PV output: irradiance relative to 1000 W/m^2 standard test conditions."""
    return np.maximum(np.asarray(irradiance, dtype=float), 0.0) / 1000.0 * panel_kw * 1000.0 * efficiency


def hourly_to_intervals(hourly: np.ndarray, horizon: int, dt_seconds: float) -> np.ndarray:
    """Hold each hourly value constant over the intervals inside that hour."""
    hours = (np.arange(horizon) * dt_seconds // 3600).astype(int)
    if len(hourly) == 0:
        raise ForecastError("no hourly values")
    hours = np.minimum(hours, len(hourly) - 1)
    return np.asarray(hourly, dtype=float)[hours]


@dataclass(frozen=True)
class RenewableForecast:
    series: np.ndarray  # predicted watts per interval
    start: int | None  # first interval with usable renewables
    end: int | None  # last such interval

    @classmethod
    def from_series(cls, watts, panel_kw: float) -> "RenewableForecast":
        watts = np.maximum(np.asarray(watts, dtype=float), 0.0)
        above = np.flatnonzero(watts > AVAILABILITY_THRESHOLD * panel_kw * 1000.0)
        if above.size == 0:
            return cls(watts, None, None)
        return cls(watts, int(above[0]), int(above[-1]))

    @property
    def available(self) -> bool:
        return self.start is not None

    def at(self, t: int) -> float:
        if t >= len(self.series):
            return 0.0
        return float(self.series[t])


def predict_renewable(
    model: SolarModel,
    horizon: int,
    panel_kw: float,
    efficiency: float = 1.0,
    dt_seconds: float = 300.0,
) -> RenewableForecast:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    n_hours = math.ceil(horizon * dt_seconds / 3600.0)
    hourly = model.predict_hours(n_hours)
    watts = irradiance_to_watts(hourly, panel_kw, efficiency)
    watts = np.minimum(watts, panel_kw * 1000.0)
    return RenewableForecast.from_series(hourly_to_intervals(watts, horizon, dt_seconds), panel_kw)


def request_weights(k: int) -> np.ndarray:
    """Weights for a window of ``k`` slots, oldest first.

    The newest slot gets 0.5, each older slot half of the next newer one, and
    the oldest slot absorbs the remainder so the weights sum to 1.
    """
    if k < 1:
        raise EmptyWindow("window is empty")
    w = np.array([0.5**i for i in range(1, k + 1)])
    w[-1] = 2 * w[-1] if k > 1 else 1.0
    return w[::-1]


def predict_requests(recent: Sequence[float]) -> float:
    """Weighted moving average of recent request counts (oldest first)."""
    if len(recent) == 0:
        raise EmptyWindow("window is empty")
    return float(np.dot(request_weights(len(recent)), np.asarray(recent, dtype=float)))
