/** Browser bootstrap: fetch the fit, wire the slider, render everything. */
import { fetchCv, fetchModel, fetchPath, postSelect } from "./api.js";
import { buildPanels } from "./paths.js";
import {
  maeChartMarkup,
  modelTableMarkup,
  panelMarkup,
  partitionMarkup,
  readoutMarkup,
  statusMarkup,
} from "./render.js";
import { indexToSlider, sliderToIndex } from "./scales.js";
import {
  applyCommitError,
  applyCommitResult,
  stateAt,
  type SelectionState,
} from "./state.js";
import type { CoefficientScale, CvDoc, PathDoc } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const status = el<HTMLDivElement>("status");
  let path: PathDoc;
  let cv: CvDoc;
  try {
    [path, cv] = await Promise.all([fetchPath(), fetchCv()]);
  } catch (err) {
    status.innerHTML = `<div class="status error">cannot reach the fit service: ${String(err)}</div>`;
    return;
  }

  let scale: CoefficientScale = "standardized";
  let state: SelectionState = stateAt(path, cv, cv.selected.index);

  const slider = el<HTMLInputElement>("lambda-slider");
  slider.min = "0";
  slider.max = String(path.lambdas.length - 1);
  slider.step = "1";
  slider.value = String(indexToSlider(state.index));

  const panels = el<HTMLDivElement>("panels");
  const maeChart = el<HTMLDivElement>("mae-chart");
  const partition = el<HTMLDivElement>("partition");
  const readout = el<HTMLDivElement>("readout");
  const model = el<HTMLDivElement>("model");

  function renderPanels(): void {
    panels.innerHTML = buildPanels(path, scale)
      .map((panel) => panelMarkup(panel, path.lambdas, path.markers, state.index))
      .join("");
  }

  async function renderModel(): Promise<void> {
    try {
      const doc = await fetchModel(state.lambda);
      model.innerHTML = modelTableMarkup(doc, scale);
    } catch (err) {
      model.innerHTML = `<div class="status error">${String(err)}</div>`;
    }
  }

  function renderAll(): void {
    renderPanels();
    maeChart.innerHTML = maeChartMarkup(cv, state.index);
    partition.innerHTML = partitionMarkup(state.partition);
    readout.innerHTML = readoutMarkup(state);
    status.innerHTML = statusMarkup(state);
    void renderModel();
  }

  slider.addEventListener("input", () => {
    const index = sliderToIndex(slider.value, path.lambdas.length);
    state = { ...stateAt(path, cv, index) };
    renderAll();
  });

  for (const radio of document.querySelectorAll<HTMLInputElement>("input[name=scale]")) {
    radio.addEventListener("change", () => {
      scale = radio.value as CoefficientScale;
      renderPanels();
      void renderModel();
    });
  }

  el<HTMLButtonElement>("commit").addEventListener("click", async () => {
    try {
      const result = await postSelect(state.lambda);
      state = applyCommitResult(state, result);
    } catch (err) {
      state = applyCommitError(state, err);
    }
    status.innerHTML = statusMarkup(state);
  });

  renderAll();
}

void boot();
