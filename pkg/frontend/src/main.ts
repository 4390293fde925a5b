/**
 * Application bootstrap: wires the model view, slider panel, comparison
 * tray, wave-update form and decision log to the service.
 */

import { ApiClient } from './api.js';
import { renderDecisionLog } from './decisionLog.js';
import { renderModelView } from './graphView.js';
import { UiSession } from './session.js';
import { createSliderPanel } from './sliders.js';
import { createTray } from './tray.js';
import { explainWaveError, runWaveUpdate } from './waveFlow.js';

export interface AppHandles {
  session: UiSession;
  api: ApiClient;
  refreshModelView: () => void;
}

export async function bootstrap(root: HTMLElement, baseUrl: string, posteriorId: string): Promise<AppHandles> {
  const api = new ApiClient(baseUrl);
  const session = new UiSession();

  const errorBar = document.createElement('div');
  errorBar.className = 'error-bar';
  errorBar.dataset.role = 'error';
  const showError = (message: string) => {
    errorBar.textContent = message;
  };
  root.appendChild(errorBar);

  session.graph = await api.getGraph();
  const summary = await api.getSummary(posteriorId);
  session.setPosterior(posteriorId, summary);

  const modelPane = document.createElement('section');
  modelPane.dataset.role = 'model-view';
  const sliderPane = document.createElement('section');
  sliderPane.dataset.role = 'sliders';
  const trayPane = document.createElement('section');
  trayPane.dataset.role = 'tray';
  const logPane = document.createElement('section');
  logPane.dataset.role = 'log';
  const wavePane = document.createElement('section');
  wavePane.dataset.role = 'wave';
  for (const pane of [modelPane, sliderPane, trayPane, wavePane, logPane]) root.appendChild(pane);

  const refreshModelView = () => {
    if (session.summary) renderModelView(modelPane, session.summary);
    renderDecisionLog(logPane, session);
  };
  refreshModelView();

  const panel = createSliderPanel(sliderPane, { session, api, onError: showError });
  const tray = createTray(trayPane, session, api, showError);

  const pinName = document.createElement('input');
  pinName.placeholder = 'scenario name';
  pinName.dataset.role = 'pin-name';
  const pinButton = document.createElement('button');
  pinButton.textContent = 'Pin scenario';
  pinButton.addEventListener('click', () => {
    void tray.pinCurrentDraft(pinName.value || `scenario-${session.pinned.length + 1}`).then(() => {
      renderDecisionLog(logPane, session);
    });
  });
  sliderPane.append(pinName, pinButton);

  const waveInput = document.createElement('textarea');
  waveInput.dataset.role = 'wave-csv';
  waveInput.placeholder = 'paste a new wave as long CSV (respondent_id,wave,item_id,value)';
  const waveButton = document.createElement('button');
  waveButton.textContent = 'Upload wave & refit';
  const waveStatus = document.createElement('p');
  waveStatus.dataset.role = 'wave-status';
  waveButton.addEventListener('click', () => {
    waveStatus.textContent = 'running fit with chained prior…';
    void runWaveUpdate(session, api, waveInput.value)
      .then((result) => {
        waveStatus.textContent = `done: posterior ${result.posteriorId.slice(0, 8)}`;
        refreshModelView();
      })
      .catch((error) => {
        waveStatus.textContent = explainWaveError(error);
      });
  });
  wavePane.append(waveInput, waveButton, waveStatus);

  void panel; // handles are returned for tests/devtools
  return { session, api, refreshModelView };
}
