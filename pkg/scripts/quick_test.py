"""Quick test script to check the lab's headline numbers in a few seconds."""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.config import LabConfig
from src.services.dyadic import DyadicAngle, alpha_partial, decay_bound_holds, v_seq
from src.services.groups import SurfaceGroup, enumerate_reduced_words
from src.tools.covertower import open_all, verify_tower
from src.tools.dynamics import TorusPoint, density_certificate, steer_block, verify_certificate
from src.tools.measures import mu_s0_delta


def test_config():
    """Test configuration."""
    print("1. Testing configuration...")
    try:
        LabConfig.validate()
        print("   ✓ Configuration valid")
        return True
    except ValueError as e:
        print(f"   ✗ Configuration error: {e}")
        return False


def test_constants():
    """Test exponents, alpha_3 and the decay bound."""
    print("\n2. Testing constants...")
    problems = []
    if v_seq(3).as_list() != [1, 4, 37]:
        problems.append("v_1..v_3")
    if alpha_partial(3).value != DyadicAngle(77309411329, 37):
        problems.append("alpha_3")
    if not all(decay_bound_holds(k) for k in (1, 2)):
        problems.append("decay bound")
    if problems:
        print(f"   ✗ Wrong: {', '.join(problems)}")
        return False
    print("   ✓ v = [1, 4, 37], alpha_3 = 0x1200000001p-37")
    return True


def test_steering():
    """Test the s = 2 steering block from the origin."""
    print("\n3. Testing steering...")
    result = steer_block(TorusPoint.origin(), 2)
    expected = 2 * (math.cos(math.pi / 64) - 1) + math.cos(math.pi / 8) - 1
    if abs(result.u - expected) > 1e-9 or not result.in_window:
        print(f"   ✗ u = {result.u:.7f}, expected {expected:.7f}")
        return False
    print(f"   ✓ u = {result.u:.7f} after 2^29 steps, drift {result.drift}")
    return True


def test_density():
    """Test one density certificate."""
    print("\n4. Testing density certificate...")
    cert = density_certificate(TorusPoint.origin(), TorusPoint.parse("1/2,1/2"), 0.05)
    ok, distance = verify_certificate(cert)
    if not ok:
        print(f"   ✗ Certificate misses target by {distance:.4g}")
        return False
    print(f"   ✓ {cert.strategy}: {cert.total_steps} steps, distance {distance:.4g}")
    return True


def test_measure():
    """Test the mass of one cut measure."""
    print("\n5. Testing cut measure...")
    cut = mu_s0_delta(1j, 0.1, N=200000)
    if abs(cut.acceptance_fraction - 0.1) > 4 * cut.sigma:
        print(f"   ✗ Acceptance {cut.acceptance_fraction:.4f}, expected 0.1")
        return False
    print(f"   ✓ Acceptance {cut.acceptance_fraction:.4f} (sigma {cut.sigma:.1e})")
    return True


def test_tower():
    """Test a small cover tower and its verification."""
    print("\n6. Testing cover tower...")
    group = SurfaceGroup(2)
    words = list(enumerate_reduced_words(group.n_gens, 2))
    tower = open_all(group, words, max_depth=3)
    report = verify_tower(tower, strict=False)
    if not report.ok:
        print(f"   ✗ {len(report.mismatches)} claims disagree with the sheet walk")
        return False
    print(f"   ✓ {len(words)} words, depth {tower.depth}, genera {tower.genera()}, all open: {tower.all_open}")
    return True


def main():
    """Run quick tests."""
    print("🚀 Quick Test Suite\n")
    print("="*50)

    tests = [
        test_config,
        test_constants,
        test_steering,
        test_density,
        test_measure,
        test_tower,
    ]

    results = []
    for test_func in tests:
        try:
            result = test_func()
            results.append(result)
        except Exception as e:
            print(f"   ✗ Test failed with exception: {e}")
            results.append(False)

    print("\n" + "="*50)
    print("📊 Results:")
    print("="*50)

    passed = sum(results)
    total = len(results)

    print(f"  Passed: {passed}/{total}")

    if passed == total:
        print("\n✅ All quick tests passed!")
        return True
    else:
        print(f"\n⚠️  {total - passed} test(s) failed")
        return False


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
