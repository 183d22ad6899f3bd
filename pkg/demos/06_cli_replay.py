"""Every CLI run leaves a manifest; replaying the manifest rebuilds the
artifacts byte for byte. This drives the installed `effectlab` CLI.

Run: python demos/06_cli_replay.py
"""
import filecmp
import subprocess
import sys
import tempfile
from pathlib import Path

root = Path(tempfile.mkdtemp(prefix="effectlab-replay-"))
first, second = root / "first", root / "second"

def cli(*args):
    subprocess.run([sys.executable, "-m", "effectlab.cli", *args],
                   check=True, capture_output=True)

print("Training 3 steps...")
cli("train", "--steps", "3", "--batch-size", "2", "--seed", "5",
    "--out", str(first))
print((first / "manifest.json").read_text())

print("Replaying the manifest into a fresh directory...")
cli("replay", str(first / "manifest.json"), "--out", str(second))

for name in ("checkpoint.ckpt", "loss_history.csv", "manifest.json"):
    same = filecmp.cmp(first / name, second / name, shallow=False)
    print(f"  {name}: {'byte-identical' if same else 'DIFFERS'}")
