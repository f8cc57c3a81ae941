"""Raw ADC counts to engineering units and back.

Temperature follows the SHT1x characteristic line T = d1 + d2 * SO_T with
the 14-bit / 2.5 V coefficients d1 = -39.6 degC and d2 = 0.01 degC/count.
Humidity applies the 12-bit polynomial linearization plus the temperature
compensation term. Light, battery and pressure are simple linear maps so
the simulator can invert them exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

from .wire import Mts400RawPayload

TEMP_COUNT_MAX = 16383  # 14-bit
RH_COUNT_MAX = 4095  # 12-bit
LIGHT_COUNT_MAX = 1023


@dataclass(frozen=True)
class ConversionConstants:
    d1: float = -39.6  # degC at count 0
    d2: float = 0.01  # degC per count
    rh_c1: float = -4.0
    rh_c2: float = 0.0405
    rh_c3: float = -2.8e-6
    rh_t1: float = 0.01
    rh_t2: float = 8e-6
    lux_per_count: float = 2.5
    mv_per_count: float = 1.0
    mbar_per_count: float = 0.1


DEFAULT_CONSTANTS = ConversionConstants()

# accelerometer counts map to g with a mid-scale zero; only used for the
# movement detector, the axes never reach engineering displays
ACCEL_ZERO_COUNT = 512
ACCEL_COUNTS_PER_G = 256


@dataclass
class EngineeringReading:
    temperature_c: float
    humidity_pct: float
    light_lux: float
    battery_v: float
    pressure_mbar: float


def temp_from_raw(so_t: int, constants: ConversionConstants = DEFAULT_CONSTANTS) -> float:
    if not 0 <= so_t <= TEMP_COUNT_MAX:
        raise ValueError(f"temperature count {so_t} outside [0, {TEMP_COUNT_MAX}]")
    return constants.d1 + constants.d2 * so_t


def _rh_unclamped(so_rh: float, temp_c: float, c: ConversionConstants) -> float:
    rh_lin = c.rh_c1 + c.rh_c2 * so_rh + c.rh_c3 * so_rh * so_rh
    return (temp_c - 25.0) * (c.rh_t1 + c.rh_t2 * so_rh) + rh_lin


def rh_from_raw(so_rh: int, temp_c: float,
                constants: ConversionConstants = DEFAULT_CONSTANTS) -> float:
    if not 0 <= so_rh <= RH_COUNT_MAX:
        raise ValueError(f"humidity count {so_rh} outside [0, {RH_COUNT_MAX}]")
    return min(100.0, max(0.0, _rh_unclamped(so_rh, temp_c, constants)))


def lux_from_raw(count: int, constants: ConversionConstants = DEFAULT_CONSTANTS) -> float:
    if not 0 <= count <= LIGHT_COUNT_MAX:
        raise ValueError(f"light count {count} outside [0, {LIGHT_COUNT_MAX}]")
    return constants.lux_per_count * count


def vbat_from_raw(count: int, constants: ConversionConstants = DEFAULT_CONSTANTS) -> float:
    if not 0 <= count <= 0xFFFF:
        raise ValueError(f"battery count {count} outside [0, 65535]")
    return count * constants.mv_per_count / 1000.0


def pressure_from_raw(count: int, constants: ConversionConstants = DEFAULT_CONSTANTS) -> float:
    if not 0 <= count <= 0xFFFF:
        raise ValueError(f"pressure count {count} outside [0, 65535]")
    return count * constants.mbar_per_count


def accel_g_from_raw(count: int) -> float:
    if not 0 <= count <= 0xFFFF:
        raise ValueError(f"accel count {count} outside [0, 65535]")
    return (count - ACCEL_ZERO_COUNT) / ACCEL_COUNTS_PER_G


def raw_temp(temp_c: float, constants: ConversionConstants = DEFAULT_CONSTANTS) -> int:
    count = round((temp_c - constants.d1) / constants.d2)
    if not 0 <= count <= TEMP_COUNT_MAX:
        raise ValueError(f"temperature {temp_c} degC is not representable")
    return count


def raw_lux(lux: float, constants: ConversionConstants = DEFAULT_CONSTANTS) -> int:
    count = round(lux / constants.lux_per_count)
    if not 0 <= count <= LIGHT_COUNT_MAX:
        raise ValueError(f"illuminance {lux} lux is not representable")
    return count


def raw_vbat(volts: float, constants: ConversionConstants = DEFAULT_CONSTANTS) -> int:
    count = round(volts * 1000.0 / constants.mv_per_count)
    if not 0 <= count <= 0xFFFF:
        raise ValueError(f"battery voltage {volts} V is not representable")
    return count


def raw_pressure(mbar: float, constants: ConversionConstants = DEFAULT_CONSTANTS) -> int:
    count = round(mbar / constants.mbar_per_count)
    if not 0 <= count <= 0xFFFF:
        raise ValueError(f"pressure {mbar} mbar is not representable")
    return count


def raw_accel(g: float) -> int:
    count = round(ACCEL_ZERO_COUNT + g * ACCEL_COUNTS_PER_G)
    if not 0 <= count <= 0xFFFF:
        raise ValueError(f"acceleration {g} g is not representable")
    return count


def raw_rh(rh_pct: float, temp_c: float,
           constants: ConversionConstants = DEFAULT_CONSTANTS) -> int:
    """Numeric inverse of rh_from_raw over the monotone count range.

    Bisects the unclamped characteristic, then picks the closer of the two
    bracketing counts; one count is at most ~0.04 %RH so the round trip
    stays within half a step.
    """
    if not 0.0 <= rh_pct <= 100.0:
        raise ValueError(f"humidity {rh_pct} %RH outside [0, 100]")
    lo, hi = 0, RH_COUNT_MAX
    if rh_pct <= _rh_unclamped(lo, temp_c, constants):
        return lo
    if rh_pct >= _rh_unclamped(hi, temp_c, constants):
        return hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _rh_unclamped(mid, temp_c, constants) < rh_pct:
            lo = mid
        else:
            hi = mid
    lo_err = abs(_rh_unclamped(lo, temp_c, constants) - rh_pct)
    hi_err = abs(_rh_unclamped(hi, temp_c, constants) - rh_pct)
    return lo if lo_err <= hi_err else hi


def reading_from_payload(payload: Mts400RawPayload,
                         constants: ConversionConstants = DEFAULT_CONSTANTS) -> EngineeringReading:
    """Convert a raw sensor payload; humidity compensation uses the converted
    temperature from the same packet."""
    temp_c = temp_from_raw(payload.temperature_raw, constants)
    return EngineeringReading(
        temperature_c=temp_c,
        humidity_pct=rh_from_raw(payload.humidity_raw, temp_c, constants),
        light_lux=lux_from_raw(payload.light_raw, constants),
        battery_v=vbat_from_raw(payload.voltage_raw, constants),
        pressure_mbar=pressure_from_raw(payload.pressure_raw, constants),
    )


def raw_from_engineering(reading: EngineeringReading,
                         constants: ConversionConstants = DEFAULT_CONSTANTS,
                         accel_x_g: float = 0.0,
                         accel_y_g: float = 0.0) -> Mts400RawPayload:
    """Inverse conversion used by the simulator to synthesize payloads."""
    temp_count = raw_temp(reading.temperature_c, constants)
    return Mts400RawPayload(
        voltage_raw=raw_vbat(reading.battery_v, constants),
        humidity_raw=raw_rh(reading.humidity_pct, reading.temperature_c, constants),
        temperature_raw=temp_count,
        light_raw=raw_lux(reading.light_lux, constants),
        press_temp_raw=temp_count,
        pressure_raw=raw_pressure(reading.pressure_mbar, constants),
        accel_x_raw=raw_accel(accel_x_g),
        accel_y_raw=raw_accel(accel_y_g),
    )
