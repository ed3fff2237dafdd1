#!/usr/bin/env python3
"""
Environment bootstrap for the UTG temporal graph toolkit

Installs the requirements, writes a .env template and a run.yaml
template, prepares the output directory and drops a small synthetic
event CSV to try the commands on.
"""

import os
import subprocess
import sys
from pathlib import Path

MIN_PYTHON = (3, 10)
STACK = ("numpy", "pandas", "pydantic", "loguru", "tqdm", "dotenv", "yaml")

ENV_TEMPLATE = """# UTG toolkit environment variables
# Flags and --config files take precedence over these.

# UTG_SEED=42
# UTG_NEGATIVES=1000
# UTG_OUTPUT_DIRECTORY=utg_results
# UTG_LOG_LEVEL=INFO
"""

RUN_TEMPLATE = """# Settings for `python cli.py <command> --config run.yaml`
model: edgebank-tw
mode: streaming
window_rule: test_span
tie_policy: pessimistic
granularity: auto
seeds: [1, 2, 3, 4, 5]
"""


def python_is_supported():
    found = sys.version_info[:2]
    if found < MIN_PYTHON:
        print(f"❌ Python {'.'.join(map(str, MIN_PYTHON))}+ required, found {found[0]}.{found[1]}")
        return False
    print(f"✅ Python {found[0]}.{found[1]}")
    return True


def pip_install(requirements="requirements.txt"):
    print(f"📦 pip install -r {requirements}")
    result = subprocess.run([sys.executable, "-m", "pip", "install", "-r", requirements])
    if result.returncode != 0:
        print(f"❌ pip exited with status {result.returncode}")
        return False
    return True


def missing_modules():
    missing = []
    for name in STACK:
        try:
            __import__(name)
        except ImportError:
            missing.append(name)
    return missing


def write_template(path, content):
    path = Path(path)
    if path.exists():
        print(f"⚠️  keeping existing {path}")
        return
    path.write_text(content, encoding="utf-8")
    print(f"✅ wrote {path}")


def output_directory():
    from dotenv import load_dotenv

    load_dotenv()
    path = Path(os.getenv("UTG_OUTPUT_DIRECTORY", "utg_results"))
    path.mkdir(parents=True, exist_ok=True)
    print(f"✅ output directory: {path}")
    return path


def write_sample_dataset(directory):
    """Synthetic transient stream with a header, for a first `stats` run"""
    from synthetic import random_stream

    stream = random_stream(num_nodes=40, num_events=2000, t_span=7 * 86400, seed=0)
    path = Path(directory) / "sample_events.csv"
    rows = ["src,dst,t"]
    rows += [f"{s},{d},{t}" for s, d, t in zip(stream.src.tolist(), stream.dst.tolist(), stream.t_start.tolist())]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    print(f"✅ sample dataset: {path} ({len(stream)} events)")
    return path


def main():
    print("UTG Toolkit - Setup")
    print("=" * 40)

    if not python_is_supported() or not pip_install():
        sys.exit(1)

    missing = missing_modules()
    if missing:
        print(f"❌ still missing after install: {', '.join(missing)}")
        sys.exit(1)
    print("✅ dependency stack imports")

    write_template(".env", ENV_TEMPLATE)
    write_template("run.yaml", RUN_TEMPLATE)
    sample = write_sample_dataset(output_directory())

    print("\n" + "=" * 50)
    print("🎉 Ready")
    print("=" * 50)
    print(f"  python cli.py stats --data {sample}")
    print(f"  python cli.py run --data {sample} --config run.yaml")
    print(f"  ./run_experiments.sh {sample}")
    print("  python example_usage.py")


if __name__ == "__main__":
    main()
