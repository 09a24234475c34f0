import { askQuestion, fetchHistory, serverUp } from "./api";
import { renderEnvelope, renderHistoryTurn } from "./render";
import "./style.css";

function newSessionId(): string {
  return `web-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 8)}`;
}

function setup(root: HTMLElement): void {
  root.innerHTML = `
    <header>
      <h1>Contract Q&amp;A</h1>
      <div class="session-bar">
        <span id="session-id" class="session-id"></span>
        <button id="new-session" type="button">New session</button>
        <button id="reload-history" type="button">Reload history</button>
      </div>
      <div id="server-banner" class="server-banner" hidden>
        Server unreachable. <button id="retry" type="button">Retry</button>
      </div>
    </header>
    <main id="thread" class="thread"></main>
    <form id="ask-form" class="ask-form">
      <input id="question" type="text" autocomplete="off"
             placeholder="Ask about a contract..." />
      <button id="send" type="submit">Send</button>
    </form>
  `;

  const thread = root.querySelector<HTMLElement>("#thread")!;
  const form = root.querySelector<HTMLFormElement>("#ask-form")!;
  const input = root.querySelector<HTMLInputElement>("#question")!;
  const send = root.querySelector<HTMLButtonElement>("#send")!;
  const banner = root.querySelector<HTMLElement>("#server-banner")!;
  const sessionLabel = root.querySelector<HTMLElement>("#session-id")!;

  let sessionId = newSessionId();
  let pending = false;   // one in-flight question per session
  sessionLabel.textContent = sessionId;

  function setPending(value: boolean): void {
    pending = value;
    input.disabled = value;
    send.disabled = value;
  }

  async function checkServer(): Promise<void> {
    banner.hidden = await serverUp();
  }

  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const question = input.value.trim();
    if (question === "" || pending) return;

    setPending(true);
    try {
      const response = await askQuestion(sessionId, question);
      thread.appendChild(renderEnvelope(response.envelope));
      input.value = "";
    } catch {
      await checkServer();
    } finally {
      setPending(false);
      thread.scrollTop = thread.scrollHeight;
    }
  });

  root.querySelector("#new-session")!.addEventListener("click", () => {
    sessionId = newSessionId();
    sessionLabel.textContent = sessionId;
    thread.innerHTML = "";
    setPending(false);
  });

  root.querySelector("#reload-history")!.addEventListener("click", async () => {
    try {
      const turns = await fetchHistory(sessionId);
      thread.innerHTML = "";
      for (const turn of turns) {
        thread.appendChild(renderHistoryTurn(turn.question, turn.answer));
      }
    } catch {
      await checkServer();
    }
  });

  root.querySelector("#retry")!.addEventListener("click", checkServer);
  void checkServer();
}

const root = document.getElementById("app");
if (root) setup(root);
