#!/usr/bin/env python3
"""Regenerate data/phonology.tsv from modern Mandarin readings.

The table is an approximation: tones 1/2 map to ping, 3/4 to ze, and rhyme
groups follow the fourteen-group 中华新韵 split of the pinyin final. Only the
default (most frequent) reading of each character is used.

Requires: pip install pypinyin
"""
import argparse
import json
import pathlib

from pypinyin import Style, pinyin

GROUPS = [
    ("麻", ["a", "ia", "ua"]),
    ("波", ["o", "e", "uo"]),
    ("皆", ["ie", "ve", "ue"]),
    ("开", ["ai", "uai"]),
    ("微", ["ei", "ui", "uei"]),
    ("豪", ["ao", "iao"]),
    ("尤", ["ou", "iu", "iou"]),
    ("寒", ["an", "ian", "uan", "van"]),
    ("文", ["en", "in", "un", "uen", "vn"]),
    ("唐", ["ang", "iang", "uang"]),
    ("庚", ["eng", "ing", "ong", "iong", "ueng"]),
    ("齐", ["i", "er", "v"]),
    ("支", []),
    ("姑", ["u"]),
]
FINAL_TO_GROUP = {f: g for g, fs in GROUPS for f in fs}
BUZZING = ("zh", "ch", "sh", "r", "z", "c", "s")


def classify(ch):
    final = pinyin(ch, style=Style.FINALS_TONE3, strict=False)[0][0]
    if not final[-1:].isdigit():
        # neutral default reading: fall back to the first toned reading
        toned = [r for r in pinyin(ch, style=Style.FINALS_TONE3, strict=False, heteronym=True)[0]
                 if r[-1:].isdigit()]
        final = toned[0] if toned else final
    initial = pinyin(ch, style=Style.INITIALS, strict=False)[0][0]
    tone = final[-1] if final and final[-1].isdigit() else "5"
    bare = final.rstrip("12345")
    if bare == "i" and initial in BUZZING:
        group = "支"
    elif initial in ("j", "q", "x", "y") and bare.startswith("u"):
        # after j/q/x/y a written u is ü
        group = FINAL_TO_GROUP.get("v" + bare[1:], "")
    else:
        group = FINAL_TO_GROUP.get(bare, "")
    tone_class = {"1": "ping", "2": "ping", "3": "ze", "4": "ze"}.get(tone, "unknown")
    return group or "-", tone_class


def gb2312_level1():
    out = []
    for hi in range(0xB0, 0xD8):
        for lo in range(0xA1, 0xFF):
            try:
                out.append(bytes([hi, lo]).decode("gb2312"))
            except UnicodeDecodeError:
                pass
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--extra", nargs="*", default=[], help="JSONL corpora whose characters are added")
    ap.add_argument("--out", default="data/phonology.tsv")
    args = ap.parse_args()
    chars = set(gb2312_level1())
    for path in args.extra:
        for line in pathlib.Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            for value in json.loads(line).values():
                if isinstance(value, str):
                    chars.update(c for c in value if "一" <= c <= "鿿")
    with open(args.out, "w", encoding="utf-8") as f:
        f.write("# guti phonology table v1\n")
        f.write("# APPROXIMATE: modern Mandarin default readings; tone 1/2 = ping, 3/4 = ze;\n")
        f.write("# rhyme groups are the fourteen 中华新韵 groups. Substitute a 平水韵 table for classical rules.\n")
        f.write("# columns: character<TAB>rhyme_group<TAB>tone_class (ping|ze|unknown); rhyme_group '-' = unknown\n")
        for ch in sorted(chars):
            group, tone = classify(ch)
            f.write(f"{ch}\t{group}\t{tone}\n")


if __name__ == "__main__":
    main()
