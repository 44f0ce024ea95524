import unittest

from recoverlab import validators


class _Bounded:
    def __init__(self, low: float = 1.0, frac: float = 0.5):
        self.low = low
        self.frac = frac

    @property
    def low(self) -> float:
        return self._low

    @low.setter
    @validators.ge(1.0)
    def low(self, val: float) -> None:
        self._low = val

    @property
    def frac(self) -> float:
        return self._frac

    @frac.setter
    @validators.lt(1.0, exc_type=ArithmeticError, err_msg="frac too big")
    @validators.gt(0.0)
    def frac(self, val: float) -> None:
        self._frac = val


class TestBoundValidators(unittest.TestCase):
    def test_accepts_values_in_range(self):
        obj = _Bounded(low=1.0, frac=0.99)
        self.assertEqual(obj.low, 1.0)
        self.assertEqual(obj.frac, 0.99)

    def test_errors(self):
        with self.assertRaises(ValueError):
            _Bounded(low=0.5)

        with self.assertRaises(ValueError):
            _Bounded(frac=0.0)

        with self.assertRaisesRegex(ArithmeticError, "frac too big"):
            _Bounded(frac=1.0)

    def test_default_message_names_the_field(self):
        with self.assertRaisesRegex(ValueError, "low must be >= 1.0"):
            _Bounded(low=0.0)

    def test_le(self):
        class _Cap:
            @property
            def val(self):
                return self._val

            @val.setter
            @validators.le(2)
            def val(self, v):
                self._val = v

        cap = _Cap()
        cap.val = 2
        with self.assertRaises(ValueError):
            cap.val = 3

