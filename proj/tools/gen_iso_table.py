#!/usr/bin/env python3
"""Regenerate data/iso639-3.tsv from the iso639-lang package data files.

Usage: gen_iso_table.py <iso639-lang data dir> <output tsv>

Special-scope codes (mis, mul, und, zxx) are dropped; they do not denote a
language.
"""
import json
import os
import sys


def main(data_dir, out_path):
    def load(name):
        with open(os.path.join(data_dir, name), encoding="utf-8") as f:
            return json.load(f)

    codes = load("iso-639.json")
    scope = load("iso-639_scope.json")
    macro = load("iso-639_macro.json")["individual"]
    other = load("iso-639_other_names.json")
    ref_of_alt = load("iso-639_ref_name.json")

    alts = {}
    for ref, names in other.items():
        alts.setdefault(ref, set()).update(names)
    for alt, ref in ref_of_alt.items():
        alts.setdefault(ref, set()).add(alt)

    rows = []
    for pt3, rec in sorted(codes["pt3"].items()):
        sc = scope.get(pt3)
        if sc not in ("I", "M"):
            continue
        name = rec["name"]
        names = sorted(a for a in alts.get(name, ()) if a != name and "\t" not in a and ";" not in a)
        rows.append([
            pt3, rec["pt2b"], rec["pt2t"], rec["pt1"],
            "Individual" if sc == "I" else "Macrolanguage",
            macro.get(pt3, ""), name, ";".join(names),
        ])

    present = {r[0]: r for r in rows}
    for r in rows:
        if r[5] and (r[5] not in present or present[r[5]][4] != "Macrolanguage"):
            r[5] = ""

    with open(out_path, "w", encoding="utf-8", newline="\n") as f:
        f.write("# iso639-3 table, generated from iso639-lang 2.6.3 data\n")
        f.write("iso639_3\tiso639_2B\tiso639_2T\tiso639_1\tscope\tmacro_parent\treference_name\talt_names\n")
        for r in rows:
            f.write("\t".join(r) + "\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
