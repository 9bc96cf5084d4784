"""Reads a JSON list of Python sources and prints the indices that fail ast.parse."""
import ast
import json
import sys

with open(sys.argv[1], encoding="utf-8") as f:
    sources = json.load(f)
bad = []
for i, src in enumerate(sources):
    try:
        ast.parse(src)
    except SyntaxError:
        bad.append(i)
print(json.dumps(bad))
