#!/usr/bin/env python3
"""
Test script for the UTG temporal graph toolkit

Checks that the dependency stack imports and that the configuration
defaults are coherent. Runs under pytest or directly as a script.
"""

import importlib


def test_imports():
    """Test if all required modules can be imported"""
    print("Testing imports...")
    for module in ("numpy", "pandas", "pydantic", "loguru", "tqdm", "dotenv", "yaml"):
        importlib.import_module(module)
        print(f"✅ {module} imported successfully")


def test_toolkit_imports():
    """Test if every toolkit module imports"""
    print("\nTesting toolkit modules...")
    for module in ("config", "exceptions", "seeding", "temporal_graph", "input_mapper", "output_mapper",
                   "baselines", "evaluation", "training", "ingest", "synthetic", "pipeline",
                   "batch_runs", "cli", "benchmark_throughput"):
        importlib.import_module(module)
        print(f"✅ {module} imported successfully")


def test_config_defaults():
    """Test config defaults"""
    print("\nTesting config defaults...")
    import config

    split = config.SPLIT_SETTINGS
    assert abs(split["train_frac"] + split["val_frac"] + split["test_frac"] - 1.0) < 1e-9
    assert config.NEGATIVE_SETTINGS["q"] >= 1
    assert 0.0 <= config.NEGATIVE_SETTINGS["historical_fraction"] <= 1.0
    assert config.TRAINING_SETTINGS["patience"] <= config.TRAINING_SETTINGS["epochs_ctdg"]
    assert all(rate > 0 for rate in config.TRAINING_SETTINGS["learning_rates"])
    assert list(config.GRANULARITIES.values()) == sorted(config.GRANULARITIES.values())
    assert all(g in config.GRANULARITIES for g in config.DEFAULT_GRANULARITY_CANDIDATES)
    assert len(config.LOGISTIC_SETTINGS["feature_names"]) == 5
    print("✅ Config defaults are coherent")


def test_cli_parser():
    """Test that every subcommand is registered"""
    print("\nTesting command line parser...")
    from cli import build_parser

    parser = build_parser()
    for command in ("stats", "discretize", "gen-negatives", "train", "eval", "run"):
        args = parser.parse_args([command, "--data", "events.csv"] + (["--count", "3"] if command == "discretize" else []))
        assert args.command == command
    print("✅ All subcommands available")


def main():
    """Main test function"""
    print("UTG Toolkit - Setup Test")
    print("=" * 40)

    all_tests_passed = True
    for test in (test_imports, test_toolkit_imports, test_config_defaults, test_cli_parser):
        try:
            test()
        except Exception as e:
            print(f"❌ {test.__name__} failed: {e}")
            all_tests_passed = False

    print("\n" + "=" * 40)
    if all_tests_passed:
        print("🎉 All tests passed! Setup is working correctly.")
        print("\nYou can now run:")
        print("  python cli.py stats --data your_events.csv")
    else:
        print("❌ Some tests failed. Please check the errors above.")
        print("\nTry running:")
        print("  python setup.py")
        print("  pip install -r requirements.txt --upgrade")


if __name__ == "__main__":
    main()
