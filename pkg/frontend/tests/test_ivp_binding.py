import gc
import math
import weakref

import numpy as np
import pytest

from oifcore import Status
from oifcore import dispatch

from oif import IVP, OifError


def decay(t, y, ydot, ud):
    ydot[:] = -y
    return 0


class TestLifecycle:
    def test_constructor_loads_and_close_unloads(self):
        before = dispatch.live_handles()
        solver = IVP("dopri5c")
        assert len(dispatch.live_handles()) == len(before) + 1
        solver.close()
        assert dispatch.live_handles() == before

    def test_close_is_idempotent(self):
        solver = IVP("rk4")
        solver.close()
        solver.close()

    def test_destructor_unloads(self):
        before = dispatch.live_handles()
        solver = IVP("rk4")
        ref = weakref.ref(solver)
        del solver
        gc.collect()
        assert ref() is None
        assert dispatch.live_handles() == before

    def test_context_manager(self):
        before = dispatch.live_handles()
        with IVP("dopri5c") as solver:
            solver.set_initial_value(np.array([1.0]), 0.0)
        assert dispatch.live_handles() == before

    def test_unknown_impl_raises_with_code(self):
        with pytest.raises(OifError) as err:
            IVP("does_not_exist")
        assert err.value.code == Status.NOT_FOUND

    def test_closed_session_rejects_calls(self):
        solver = IVP("dopri5c")
        solver.close()
        with pytest.raises(OifError) as err:
            solver.set_tolerances(1e-6, 1e-12)
        assert err.value.code == Status.NOT_FOUND


class TestSolve:
    def test_exponential_decay(self):
        with IVP("dopri5c") as solver:
            solver.set_initial_value(np.array([1.0]), 0.0)
            solver.set_rhs_fn(decay)
            solver.set_tolerances(1e-6, 1e-12)
            y = np.empty(1)
            solver.integrate(1.0, y)
            assert abs(y[0] - math.exp(-1.0)) <= 1e-4

    def test_trampoline_always_crossed_with_native_plugins(self):
        with IVP("dopri5c") as solver:
            solver.set_initial_value(np.array([1.0]), 0.0)
            solver.set_rhs_fn(decay)
            y = np.empty(1)
            solver.integrate(0.5, y)
            assert solver.rhs_boundary_crossings > 0

    def test_exception_code_equals_core_status(self):
        with IVP("dopri5c") as solver:
            solver.set_initial_value(np.array([1.0]), 0.0)
            solver.set_rhs_fn(lambda t, y, ydot, ud: 9)
            y = np.empty(1)
            with pytest.raises(OifError) as err:
                solver.integrate(1.0, y)
            assert err.value.code == Status.SOLVER_FAILURE
            assert err.value.code == err.value.status

    def test_rhs_exception_chained(self):
        def bad(t, y, ydot, ud):
            raise KeyError("missing")

        with IVP("dopri5c") as solver:
            solver.set_initial_value(np.array([1.0]), 0.0)
            solver.set_rhs_fn(bad)
            y = np.empty(1)
            with pytest.raises(OifError) as err:
                solver.integrate(1.0, y)
            assert isinstance(err.value.__cause__, KeyError)

    def test_user_data_object_round_trip(self):
        seen = {}

        def probe(t, y, ydot, context):
            seen["context"] = context
            ydot[:] = 0.0
            return 0

        payload = {"dx": 0.25, "label": "cells"}
        with IVP("dopri5c") as solver:
            solver.set_initial_value(np.array([1.0]), 0.0)
            solver.set_rhs_fn(probe)
            solver.set_user_data(payload)
            y = np.empty(1)
            solver.integrate(0.5, y)
        assert seen["context"] is payload

    def test_user_data_none_passes_null(self):
        seen = {}

        def probe(t, y, ydot, context):
            seen["context"] = context
            ydot[:] = 0.0
            return 0

        with IVP("dopri5c") as solver:
            solver.set_initial_value(np.array([1.0]), 0.0)
            solver.set_rhs_fn(probe)
            solver.set_user_data(None)
            y = np.empty(1)
            solver.integrate(0.5, y)
        assert seen["context"] is None

    def test_integrator_selection_errors(self):
        with IVP("dopri5c") as solver:
            solver.set_initial_value(np.array([1.0]), 0.0)
            solver.set_rhs_fn(decay)
            with pytest.raises(OifError) as err:
                solver.set_integrator("rosenbrock23")
            assert err.value.code == Status.NOT_FOUND

    def test_unknown_option_rejected_with_name(self):
        with IVP("dopri5c") as solver:
            solver.set_initial_value(np.array([1.0]), 0.0)
            solver.set_rhs_fn(decay)
            with pytest.raises(OifError, match="nsteps"):
                solver.set_integrator("dopri5", {"nsteps": 10})


class TestConcurrentConstruction:
    def test_gateways_construct_and_solve_on_worker_threads(self):
        import threading

        errors = []
        results = {}

        def worker(idx):
            try:
                with IVP("dopri5c") as solver:
                    solver.set_initial_value(np.array([1.0]), 0.0)
                    solver.set_rhs_fn(decay)
                    y = np.empty(1)
                    solver.integrate(1.0, y)
                    results[idx] = y[0]
            except Exception as exc:   # noqa: BLE001 - collect for main
                errors.append(exc)

        threads = [threading.Thread(target=worker, args=(i,))
                   for i in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        assert len(set(results.values())) == 1   # identical trajectories


class TestGarbageCollectionSafety:
    def test_rhs_and_user_data_survive_user_dropping_references(self):
        solver = IVP("dopri5c")
        solver.set_initial_value(np.array([1.0]), 0.0)

        def make_rhs():
            scale = np.array([2.0])   # dies with the closure unless pinned

            def rhs(t, y, ydot, context):
                ydot[:] = -scale[0] * y * context["gain"]
                return 0
            return rhs

        solver.set_rhs_fn(make_rhs())
        solver.set_user_data({"gain": 0.5})
        gc.collect()

        y = np.empty(1)
        solver.integrate(1.0, y)
        assert abs(y[0] - math.exp(-1.0)) <= 1e-4
        solver.close()

    def test_two_sessions_keep_separate_contexts(self):
        seen = {"a": None, "b": None}

        def make_probe(key):
            def probe(t, y, ydot, context):
                seen[key] = context
                ydot[:] = 0.0
                return 0
            return probe

        ctx_a, ctx_b = {"who": "a"}, {"who": "b"}
        with IVP("dopri5c") as sa, IVP("dopri5c") as sb:
            for solver, key, ctx in ((sa, "a", ctx_a), (sb, "b", ctx_b)):
                solver.set_initial_value(np.array([1.0]), 0.0)
                solver.set_rhs_fn(make_probe(key))
                solver.set_user_data(ctx)
            y = np.empty(1)
            sa.integrate(0.25, y)
            sb.integrate(0.25, y)
        assert seen["a"] is ctx_a
        assert seen["b"] is ctx_b
