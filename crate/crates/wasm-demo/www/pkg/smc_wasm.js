/* @ts-self-types="./smc_wasm.d.ts" */

/**
 * Errors and fitted values from [`Demo::compare`].
 */
export class Comparison {
    static __wrap(ptr) {
        const obj = Object.create(Comparison.prototype);
        obj.__wbg_ptr = ptr;
        ComparisonFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        ComparisonFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_comparison_free(ptr, 0);
    }
    /**
     * Completed monitor values of one feature.
     * @param {string} method
     * @param {number} feature
     * @returns {Float64Array}
     */
    imputed(method, feature) {
        const ptr0 = passStringToWasm0(method, wasm.__wbindgen_malloc, wasm.__wbindgen_realloc);
        const len0 = WASM_VECTOR_LEN;
        const ret = wasm.comparison_imputed(this.__wbg_ptr, ptr0, len0, feature);
        var v2 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v2;
    }
    /**
     * Spatial predictions at the new locations.
     * @param {number} feature
     * @returns {Float64Array}
     */
    predicted(feature) {
        const ret = wasm.comparison_predicted(this.__wbg_ptr, feature);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {number}
     */
    get lambda_lrmc() {
        const ret = wasm.__wbg_get_comparison_lambda_lrmc(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get lambda_smc() {
        const ret = wasm.__wbg_get_comparison_lambda_smc(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get mse_lrmc() {
        const ret = wasm.__wbg_get_comparison_mse_lrmc(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get mse_new_baseline() {
        const ret = wasm.__wbg_get_comparison_mse_new_baseline(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get mse_new_smc() {
        const ret = wasm.__wbg_get_comparison_mse_new_smc(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get mse_smc() {
        const ret = wasm.__wbg_get_comparison_mse_smc(this.__wbg_ptr);
        return ret;
    }
    /**
     * @param {number} arg0
     */
    set lambda_lrmc(arg0) {
        wasm.__wbg_set_comparison_lambda_lrmc(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set lambda_smc(arg0) {
        wasm.__wbg_set_comparison_lambda_smc(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set mse_lrmc(arg0) {
        wasm.__wbg_set_comparison_mse_lrmc(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set mse_new_baseline(arg0) {
        wasm.__wbg_set_comparison_mse_new_baseline(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set mse_new_smc(arg0) {
        wasm.__wbg_set_comparison_mse_new_smc(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set mse_smc(arg0) {
        wasm.__wbg_set_comparison_mse_smc(this.__wbg_ptr, arg0);
    }
}
if (Symbol.dispose) Comparison.prototype[Symbol.dispose] = Comparison.prototype.free;

/**
 * One simulated replicate plus the spatial design built on its monitors.
 */
export class Demo {
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        DemoFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_demo_free(ptr, 0);
    }
    /**
     * Fits both methods at the preset's target rank.
     * @returns {Comparison}
     */
    compare() {
        const ret = wasm.demo_compare(this.__wbg_ptr);
        if (ret[2]) {
            throw takeFromExternrefTable0(ret[1]);
        }
        return Comparison.__wrap(ret[0]);
    }
    /**
     * Grid coordinates as `[x0, y0, x1, y1, …]`, monitors first.
     * @returns {Float64Array}
     */
    coords() {
        const ret = wasm.demo_coords(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {number}
     */
    get features() {
        const ret = wasm.demo_features(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {number}
     */
    get grid_side() {
        const ret = wasm.demo_grid_side(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * Warm-started fits down a geometric λ grid from σ₁ to `1e-2·σ₁`.
     * Returns `[λ, rank, missing-entry MSE]` triples, largest λ first.
     * @param {string} method
     * @param {number} points
     * @returns {Float64Array}
     */
    lambda_path(method, points) {
        const ptr0 = passStringToWasm0(method, wasm.__wbindgen_malloc, wasm.__wbindgen_realloc);
        const len0 = WASM_VECTOR_LEN;
        const ret = wasm.demo_lambda_path(this.__wbg_ptr, ptr0, len0, points);
        if (ret[3]) {
            throw takeFromExternrefTable0(ret[2]);
        }
        var v2 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v2;
    }
    /**
     * @returns {number}
     */
    get missing_fraction() {
        const ret = wasm.demo_missing_fraction(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get n_monitor() {
        const ret = wasm.demo_n_monitor(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {number}
     */
    get n_new() {
        const ret = wasm.demo_n_new(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * `preset` is e.g. `toy-C`; the seed replaces the preset's data seed.
     * @param {string} preset_name
     * @param {number} mcar
     * @param {number} seed
     */
    constructor(preset_name, mcar, seed) {
        const ptr0 = passStringToWasm0(preset_name, wasm.__wbindgen_malloc, wasm.__wbindgen_realloc);
        const len0 = WASM_VECTOR_LEN;
        const ret = wasm.demo_new(ptr0, len0, mcar, seed);
        if (ret[2]) {
            throw takeFromExternrefTable0(ret[1]);
        }
        this.__wbg_ptr = ret[0];
        DemoFinalization.register(this, this.__wbg_ptr, this);
        return this;
    }
    /**
     * Monitor values of one feature with hidden cells as NaN.
     * @param {number} feature
     * @returns {Float64Array}
     */
    observed(feature) {
        const ret = wasm.demo_observed(this.__wbg_ptr, feature);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * True values of one feature at every location, monitors first.
     * @param {number} feature
     * @returns {Float64Array}
     */
    truth(feature) {
        const ret = wasm.demo_truth(this.__wbg_ptr, feature);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
}
if (Symbol.dispose) Demo.prototype[Symbol.dispose] = Demo.prototype.free;
function __wbg_get_imports() {
    const import0 = {
        __proto__: null,
        __wbg___wbindgen_throw_41e9ee4f547fc59a: function(arg0, arg1) {
            throw new Error(getStringFromWasm0(arg0, arg1));
        },
        __wbindgen_generic_0000000000000001: function(arg0, arg1) {
            // Cast intrinsic for `Ref(String) -> Externref`.
            const ret = getStringFromWasm0(arg0, arg1);
            return ret;
        },
        __wbindgen_init_externref_table: function() {
            const table = wasm.__wbindgen_externrefs;
            const offset = table.grow(4);
            table.set(0, undefined);
            table.set(offset + 0, undefined);
            table.set(offset + 1, null);
            table.set(offset + 2, true);
            table.set(offset + 3, false);
        },
    };
    return {
        __proto__: null,
        "./smc_wasm_bg.js": import0,
    };
}

const ComparisonFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_comparison_free(ptr, 1));
const DemoFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_demo_free(ptr, 1));

function getArrayF64FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat64ArrayMemory0().subarray(ptr / 8, ptr / 8 + len);
}

let cachedFloat64ArrayMemory0 = null;
function getFloat64ArrayMemory0() {
    if (cachedFloat64ArrayMemory0 === null || cachedFloat64ArrayMemory0.byteLength === 0) {
        cachedFloat64ArrayMemory0 = new Float64Array(wasm.memory.buffer);
    }
    return cachedFloat64ArrayMemory0;
}

function getStringFromWasm0(ptr, len) {
    return decodeText(ptr >>> 0, len);
}

let cachedUint8ArrayMemory0 = null;
function getUint8ArrayMemory0() {
    if (cachedUint8ArrayMemory0 === null || cachedUint8ArrayMemory0.byteLength === 0) {
        cachedUint8ArrayMemory0 = new Uint8Array(wasm.memory.buffer);
    }
    return cachedUint8ArrayMemory0;
}

function passStringToWasm0(arg, malloc, realloc) {
    if (realloc === undefined) {
        const buf = cachedTextEncoder.encode(arg);
        const ptr = malloc(buf.length, 1) >>> 0;
        getUint8ArrayMemory0().subarray(ptr, ptr + buf.length).set(buf);
        WASM_VECTOR_LEN = buf.length;
        return ptr;
    }

    let len = arg.length;
    let ptr = malloc(len, 1) >>> 0;

    const mem = getUint8ArrayMemory0();

    let offset = 0;

    for (; offset < len; offset++) {
        const code = arg.charCodeAt(offset);
        if (code > 0x7F) break;
        mem[ptr + offset] = code;
    }
    if (offset !== len) {
        if (offset !== 0) {
            arg = arg.slice(offset);
        }
        ptr = realloc(ptr, len, len = offset + arg.length * 3, 1) >>> 0;
        const view = getUint8ArrayMemory0().subarray(ptr + offset, ptr + len);
        const ret = cachedTextEncoder.encodeInto(arg, view);

        offset += ret.written;
        ptr = realloc(ptr, len, offset, 1) >>> 0;
    }

    WASM_VECTOR_LEN = offset;
    return ptr;
}

function takeFromExternrefTable0(idx) {
    const value = wasm.__wbindgen_externrefs.get(idx);
    wasm.__externref_table_dealloc(idx);
    return value;
}

let cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
cachedTextDecoder.decode();
const MAX_SAFARI_DECODE_BYTES = 2146435072;
let numBytesDecoded = 0;
function decodeText(ptr, len) {
    numBytesDecoded += len;
    if (numBytesDecoded >= MAX_SAFARI_DECODE_BYTES) {
        cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
        cachedTextDecoder.decode();
        numBytesDecoded = len;
    }
    return cachedTextDecoder.decode(getUint8ArrayMemory0().subarray(ptr, ptr + len));
}

const cachedTextEncoder = new TextEncoder();

if (!('encodeInto' in cachedTextEncoder)) {
    cachedTextEncoder.encodeInto = function (arg, view) {
        const buf = cachedTextEncoder.encode(arg);
        view.set(buf);
        return {
            read: arg.length,
            written: buf.length
        };
    };
}

let WASM_VECTOR_LEN = 0;

let wasmModule, wasmInstance, wasm;
function __wbg_finalize_init(instance, module) {
    wasmInstance = instance;
    wasm = instance.exports;
    wasmModule = module;
    cachedFloat64ArrayMemory0 = null;
    cachedUint8ArrayMemory0 = null;
    wasm.__wbindgen_start();
    return wasm;
}

async function __wbg_load(module, imports) {
    if (typeof Response === 'function' && module instanceof Response) {
        if (!module.ok) {
            throw new Error(`failed to fetch Wasm: ${module.status} ${module.statusText} fetching '${module.url}'`);
        }

        if (typeof WebAssembly.instantiateStreaming === 'function') {
            try {
                return await WebAssembly.instantiateStreaming(module, imports);
            } catch (e) {
                const validResponse = expectedResponseType(module.type);

                if (validResponse && module.headers.get('Content-Type') !== 'application/wasm') {
                    console.warn("`WebAssembly.instantiateStreaming` failed because your server does not serve Wasm with `application/wasm` MIME type. Falling back to `WebAssembly.instantiate` which is slower. Original error:\n", e);

                } else { throw e; }
            }
        }

        const bytes = await module.arrayBuffer();
        return await WebAssembly.instantiate(bytes, imports);
    } else {
        const instance = await WebAssembly.instantiate(module, imports);

        if (instance instanceof WebAssembly.Instance) {
            return { instance, module };
        } else {
            return instance;
        }
    }

    function expectedResponseType(type) {
        switch (type) {
            case 'basic': case 'cors': case 'default': return true;
        }
        return false;
    }
}

function initSync(module) {
    if (wasm !== undefined) return wasm;


    if (module !== undefined) {
        if (Object.getPrototypeOf(module) === Object.prototype) {
            ({module} = module)
        } else {
            console.warn('using deprecated parameters for `initSync()`; pass a single object instead')
        }
    }

    const imports = __wbg_get_imports();
    if (!(module instanceof WebAssembly.Module)) {
        module = new WebAssembly.Module(module);
    }
    const instance = new WebAssembly.Instance(module, imports);
    return __wbg_finalize_init(instance, module);
}

async function __wbg_init(module_or_path) {
    if (wasm !== undefined) return wasm;


    if (module_or_path !== undefined) {
        if (Object.getPrototypeOf(module_or_path) === Object.prototype) {
            ({module_or_path} = module_or_path)
        } else {
            console.warn('using deprecated parameters for the initialization function; pass a single object instead')
        }
    }

    if (module_or_path === undefined) {
        module_or_path = new URL('smc_wasm_bg.wasm', import.meta.url);
    }
    const imports = __wbg_get_imports();

    if (typeof module_or_path === 'string' || (typeof Request === 'function' && module_or_path instanceof Request) || (typeof URL === 'function' && module_or_path instanceof URL)) {
        module_or_path = fetch(module_or_path);
    }

    const { instance, module } = await __wbg_load(await module_or_path, imports);

    return __wbg_finalize_init(instance, module);
}

export { initSync, __wbg_init as default };
