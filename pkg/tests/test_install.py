#!/usr/bin/env python3
"""
Quick test script to verify the certiplace installation
"""
import subprocess
import sys


def test_import():
    """Test package import"""
    from certiplace import __version__, generate_ms, generate_mc, evaluate, ogp_sweep

    assert __version__
    assert all(callable(f) for f in (generate_ms, generate_mc, evaluate, ogp_sweep))


def test_public_names():
    """Test that every exported name resolves"""
    import certiplace

    missing = [name for name in certiplace.__all__ if not hasattr(certiplace, name)]
    assert missing == []


def test_cli():
    """Test CLI availability"""
    from certiplace import __version__

    result = subprocess.run(
        [sys.executable, "-m", "certiplace.cli", "--version"],
        capture_output=True,
        text=True,
        timeout=30,
    )
    assert result.returncode == 0
    assert __version__ in result.stdout


def main():
    print("=" * 60)
    print("Testing certiplace installation")
    print("=" * 60)

    tests = [
        ("Package Import", test_import),
        ("Public Names", test_public_names),
        ("CLI Command", test_cli),
    ]
    failed = 0
    for name, test_func in tests:
        try:
            test_func()
            print(f"✓ {name}")
        except Exception as e:
            failed += 1
            print(f"✗ {name}: {e}")

    print("=" * 60)
    if failed:
        print(f"✗ {failed} of {len(tests)} checks failed")
        return 1
    print(f"✓ All checks passed ({len(tests)}/{len(tests)})")
    print("\nNext steps:")
    print("  1. Generate a benchmark: certiplace gen-ms --config bench.cfg")
    print("  2. Score a placement:    certiplace eval placed.aux --utilization 0.9")
    return 0


if __name__ == "__main__":
    sys.exit(main())
