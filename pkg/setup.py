#!/usr/bin/env python3
"""
missbart Setup Script
Verifies installation and prepares the working directories.
"""

import sys
from pathlib import Path


def check_python_version():
    """Check Python version."""
    print("Checking Python version...")
    version = sys.version_info
    if version.major < 3 or (version.major == 3 and version.minor < 10):
        print(f"❌ Python 3.10+ required. Found: {version.major}.{version.minor}")
        return False
    print(f"✅ Python {version.major}.{version.minor}.{version.micro}")
    return True


def check_dependencies():
    """Check if required packages are installed."""
    print("\nChecking dependencies...")

    required = {
        "numpy": "numpy",
        "scipy": "scipy",
        "pandas": "pandas",
        "sklearn": "scikit-learn",
        "pydantic": "pydantic",
        "yaml": "pyyaml",
        "dotenv": "python-dotenv",
        "structlog": "structlog",
        "httpx": "httpx",
        "tenacity": "tenacity",
    }

    missing = []
    for module, package in required.items():
        try:
            __import__(module)
            print(f"  ✅ {package}")
        except ImportError:
            print(f"  ❌ {package} - NOT INSTALLED")
            missing.append(package)

    if missing:
        print(f"\n  Install with: pip install {' '.join(missing)}")
    return len(missing) == 0


def check_presets():
    """Check that the scenario presets load."""
    print("\nChecking scenario presets...")
    try:
        from mdm import list_presets, load_preset
        names = list_presets()
        for name in names:
            preset = load_preset(name)
            print(f"  ✅ {name} ({preset.n_levels} levels)")
        return bool(names)
    except Exception as e:
        print(f"  ❌ Presets failed to load: {e}")
        return False


def check_bhd_data():
    """Check whether the Boston Housing CSV has been fetched."""
    print("\nChecking Boston Housing data...")
    try:
        from utils.config import load_config
        path = load_config("config.yaml").get("bhd", {}).get("csv_path")
    except Exception:
        path = "./data/BostonHousing.csv"

    if path and Path(path).exists():
        print(f"  ✅ {path}")
        return True
    print("  ⚠️  Not found (bench-bhd needs it). Run: python main.py fetch-bhd")
    return False


def create_directories():
    """Create required directories."""
    print("\nCreating directories...")

    dirs = ["outputs", "logs", "data"]
    for d in dirs:
        Path(d).mkdir(exist_ok=True)
        print(f"  ✅ {d}/")


def main():
    print("="*60)
    print("🌲 missbart - Setup Verification")
    print("="*60)

    results = {
        "Python": check_python_version(),
        "Dependencies": check_dependencies(),
        "Presets": check_presets(),
    }
    bhd_ready = check_bhd_data()

    create_directories()

    print("\n" + "="*60)
    print("SETUP SUMMARY")
    print("="*60)

    all_passed = True
    for check, passed in results.items():
        status = "✅" if passed else "❌"
        print(f"  {status} {check}")
        if not passed:
            all_passed = False
    print(f"  {'✅' if bhd_ready else '⚠️ '} Boston Housing data (optional)")

    print("\n" + "-"*60)

    if all_passed:
        print("✅ All checks passed! missbart is ready to use.")
        print("\nRun: python main.py --help")
    else:
        print("⚠️  Some checks failed. Please resolve the issues above.")
        print("\nFor installation help, see README.md")

    print("="*60)


if __name__ == "__main__":
    main()
