/** Client-side bounds for writable control parameters. */

export const SETPOINT_MIN_C = 10;
export const SETPOINT_MAX_C = 30;
export const THRESHOLD_MIN_LUX = 0;
export const THRESHOLD_MAX_LUX = 2000;

export interface ValidationResult {
  ok: boolean;
  message?: string;
}

function checkRange(value: number, min: number, max: number, unit: string): ValidationResult {
  if (!Number.isFinite(value)) {
    return { ok: false, message: "enter a number" };
  }
  if (value < min || value > max) {
    return { ok: false, message: `must be between ${min} and ${max} ${unit}` };
  }
  return { ok: true };
}

export function validateSetpoint(value: number): ValidationResult {
  return checkRange(value, SETPOINT_MIN_C, SETPOINT_MAX_C, "°C");
}

export function validateThreshold(value: number): ValidationResult {
  return checkRange(value, THRESHOLD_MIN_LUX, THRESHOLD_MAX_LUX, "lux");
}
