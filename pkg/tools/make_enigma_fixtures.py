"""Regenerate the frozen Enigma oracle vectors under tests/fixtures/.

Requires the ``crypto-enigma`` reference simulator importable (the PyPI
release is Python 2 only; a py3 port works: run it through lib2to3, give
``EnigmaConfig`` a ``__hash__``, and alias ``unicode = str``). Point
``CRYPTO_ENIGMA_PATH`` at the directory containing the ``crypto_enigma``
package if it is not installed.

    python tools/make_enigma_fixtures.py
"""

import builtins
import os
import random
import string
import sys
from pathlib import Path

builtins.unicode = str
if os.environ.get("CRYPTO_ENIGMA_PATH"):
    sys.path.insert(0, os.environ["CRYPTO_ENIGMA_PATH"])

from crypto_enigma import EnigmaConfig  # noqa: E402

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

# (file name, wheel spec, ring string, space-separated plug pairs, vector count)
SUITES = [
    ("enigma_a_i_ii_iii_rings_2_14_8.tsv", "A-I-II-III", "02.14.08", "", 1000),
    ("enigma_b_iv_ii_v_rings_17_3_24_plugs.tsv", "B-IV-II-V", "17.03.24", "AQ BJ CX DL EZ FO GU HN IW KY", 300),
]


def main() -> None:
    rng = random.Random(20170807)
    letters = string.ascii_uppercase
    FIXTURES.mkdir(parents=True, exist_ok=True)
    for name, wheels, rings, plugs, count in SUITES:
        lines = []
        for i in range(count):
            key = "".join(rng.choice(letters) for _ in range(3))
            n = 0 if i < 5 else rng.randint(1, 50)
            plain = "".join(rng.choice(letters) for _ in range(n))
            cfg = EnigmaConfig.config_enigma(wheels, key, plugs.replace(" ", ".") or "~", rings)
            cipher = cfg.enigma_encoding(plain) if plain else ""
            lines.append(f"{key}\t{plain}\t{cipher}\n")
        (FIXTURES / name).write_text("".join(lines))
        print(f"wrote {count} vectors to {name}")


if __name__ == "__main__":
    main()
