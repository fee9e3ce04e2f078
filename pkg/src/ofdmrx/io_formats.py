"""File formats shared by the CLI tools.

* ``.cf32``  - binary I/Q: little-endian interleaved 32-bit floats (I, Q per
  sample), one file per antenna (``rx_ant<k>.cf32``).
* ``.cf64``  - same layout at 64-bit, used for equalized outputs.
* ``.u8``    - one byte per bit (0/1).
* metadata sidecar - UTF-8 text, one ``key=value`` per line; complex values
  are written ``re,im`` and lists are ``;``-separated.
"""

import numpy as np

from .errors import InputError

FORMAT_VERSION = 1


def write_cf32(path, samples):
    samples = np.asarray(samples, dtype=np.complex128).ravel()
    interleaved = np.empty(2 * samples.size, dtype="<f4")
    interleaved[0::2] = samples.real
    interleaved[1::2] = samples.imag
    interleaved.tofile(path)


def read_cf32(path):
    raw = np.fromfile(path, dtype="<f4")
    if raw.size % 2 != 0:
        raise InputError(f"{path}: odd float count, not interleaved I/Q")
    return (raw[0::2] + 1j * raw[1::2]).astype(np.complex128)


def write_cf64(path, samples):
    samples = np.asarray(samples, dtype=np.complex128).ravel()
    interleaved = np.empty(2 * samples.size, dtype="<f8")
    interleaved[0::2] = samples.real
    interleaved[1::2] = samples.imag
    interleaved.tofile(path)


def read_cf64(path):
    raw = np.fromfile(path, dtype="<f8")
    if raw.size % 2 != 0:
        raise InputError(f"{path}: odd float count, not interleaved I/Q")
    return raw[0::2] + 1j * raw[1::2]


def write_bits_u8(path, bits):
    np.asarray(bits, dtype=np.uint8).tofile(path)


def read_bits_u8(path):
    bits = np.fromfile(path, dtype=np.uint8)
    if bits.size and bits.max() > 1:
        raise InputError(f"{path}: values other than 0/1 found")
    return bits


def format_value(value):
    if isinstance(value, complex):
        return f"{value.real!r},{value.imag!r}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return ";".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_meta(path, entries):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"format_version={FORMAT_VERSION}\n")
        for key, value in entries.items():
            fh.write(f"{key}={format_value(value)}\n")


def read_meta(path):
    entries = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InputError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            entries[key.strip()] = value.strip()
    if "format_version" not in entries:
        raise InputError(f"{path}: missing format_version")
    return entries


def parse_complex(text):
    re_part, im_part = text.split(",")
    return complex(float(re_part), float(im_part))


def parse_complex_list(text):
    text = text.strip()
    if not text:
        return []
    return [parse_complex(part) for part in text.split(";")]
