#!/usr/bin/env python3
"""Regenerates data/ontology/v1/materials.yaml from molar masses and isentropic exponents.

R = R_univ / M, cv = R / (kappa - 1), cp = kappa * cv
"""
import sys

R_UNIV = 8.31446261815324

# name: (molar mass kg/mol, kappa, synonyms)
GASES = {
    # Air is pinned by its customary specific gas constant 287.04 J/(kg*K).
    "air": (R_UNIV / 287.04, 1.4, ["Luft"]),
    "argon": (0.039948, 5.0 / 3.0, ["Ar", "Argon"]),
    "carbon dioxide": (0.0440095, 1.289, ["CO2", "Kohlendioxid"]),
    "helium": (0.004002602, 5.0 / 3.0, ["He", "Helium"]),
    "hydrogen": (0.00201588, 1.405, ["H2", "Wasserstoff"]),
    "nitrogen": (0.0280134, 1.4, ["N2", "Stickstoff"]),
    "oxygen": (0.0319988, 1.395, ["O2", "Sauerstoff"]),
}


def main(out):
    out.write("# Generated by tools/gen_materials.py; do not edit by hand.\n")
    out.write("materials:\n")
    for name, (molar_mass, kappa, synonyms) in sorted(GASES.items()):
        r = R_UNIV / molar_mass
        cv = r / (kappa - 1.0)
        cp = kappa * cv
        out.write(f"  {name}:\n")
        out.write(f"    molar_mass: {molar_mass!r}\n")
        out.write(f"    specific_gas_constant: {r!r}\n")
        out.write(f"    cv: {cv!r}\n")
        out.write(f"    cp: {cp!r}\n")
        out.write("    is_ideal_gas: true\n")
        out.write(f"    synonyms: [{', '.join(synonyms)}]\n")


if __name__ == "__main__":
    main(sys.stdout)
