import ctypes as ct

import numpy as np
import pytest

from oifcore.marshal import TypeTag

from oif import CallbackWrapper, convert


class TestScalars:
    def test_float(self):
        arg = convert(1.5)
        assert arg.tag == TypeTag.FLOAT64
        assert arg.value == 1.5

    def test_int(self):
        arg = convert(42)
        assert arg.tag == TypeTag.INT
        assert arg.value == 42

    def test_numpy_scalars(self):
        assert convert(np.int32(7)).tag == TypeTag.INT
        assert convert(np.float64(7.0)).tag == TypeTag.FLOAT64

    def test_int_out_of_32bit_range(self):
        with pytest.raises(TypeError):
            convert(2**31)
        with pytest.raises(TypeError):
            convert(-(2**31) - 1)

    def test_bool_rejected(self):
        with pytest.raises(TypeError):
            convert(True)


class TestArrays:
    def test_zero_copy_wrap(self):
        a = np.array([1.0, 2.0, 3.0])
        arg = convert(a)
        assert arg.tag == TypeTag.ARRAY_F64
        assert arg.value.data_address == a.ctypes.data

    def test_buffer_address_survives_round_trip(self):
        from oifcore.marshal import PackedArgs, unpack_args
        a = np.array([4.0, 5.0])
        arg = convert(a)
        (back,) = unpack_args(PackedArgs([arg]), [TypeTag.ARRAY_F64])
        assert back.data_address == a.ctypes.data
        back.as_numpy()[0] = 9.0
        assert a[0] == 9.0

    def test_wrong_dtype_message(self):
        with pytest.raises(TypeError, match="float64"):
            convert(np.arange(3))

    def test_non_contiguous_message(self):
        a = np.arange(10, dtype=np.float64)[::2]
        with pytest.raises(TypeError, match="contiguous"):
            convert(a)

    def test_multidimensional_rejected(self):
        with pytest.raises(TypeError, match="1-dimensional"):
            convert(np.zeros((2, 2)))


class TestStringsAndDicts:
    def test_str(self):
        arg = convert("dopri5")
        assert arg.tag == TypeTag.STR

    def test_dict_tags(self):
        arg = convert({"max_steps": 10000, "h_init": 0.5})
        assert arg.tag == TypeTag.CONFIG_DICT
        assert arg.value.tag_of("max_steps") == TypeTag.INT
        assert arg.value.tag_of("h_init") == TypeTag.FLOAT64

    def test_dict_bad_value(self):
        with pytest.raises(TypeError, match="color"):
            convert({"color": "red"})

    def test_dict_bad_key(self):
        with pytest.raises(TypeError):
            convert({3: 1.0})


class TestCallables:
    def test_wrapping_and_counting(self):
        def rhs(t, y, ydot, ud):
            ydot[:] = 2.0 * y
            return 0

        wrapper = CallbackWrapper(rhs)
        arg = convert(wrapper)
        assert arg.tag == TypeTag.CALLBACK
        assert wrapper.calls == 0

        from oifcore.marshal import array_view_from_numpy
        y = array_view_from_numpy(np.array([3.0]))
        out_buf = np.empty(1)
        out = array_view_from_numpy(out_buf)
        status = wrapper.callback.trampoline(
            0.0, ct.byref(y.struct), ct.byref(out.struct), None)
        assert status == 0
        assert wrapper.calls == 1
        assert out_buf[0] == 6.0

    def test_original_kept_for_same_context_shortcut(self):
        def rhs(t, y, ydot, ud):
            return 0

        arg = convert(rhs)
        assert arg.tag == TypeTag.CALLBACK
        assert arg.value.native_handle is rhs
        assert arg.value.source_tag == "scripting"

    def test_non_callable_rejected(self):
        with pytest.raises(TypeError):
            CallbackWrapper(7)


def test_unsupported_type_message():
    with pytest.raises(TypeError, match="set"):
        convert({1, 2})
