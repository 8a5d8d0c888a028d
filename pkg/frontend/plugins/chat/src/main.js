// Chat plugin: a running multi-logue over persisted create datagrams.
//
// Grammar: payload = { sender: string, text: string }. Messages from this
// user (senderID === wrapper.clientID) render right-aligned in blue; every
// other sender renders left-aligned in grey.

export function mount(container, wrapper) {
  container.innerHTML = `
    <div class="chat-root">
      <ul class="chat-feed"></ul>
      <form class="chat-form">
        <input class="chat-name" placeholder="your name" autocomplete="off" />
        <input class="chat-text" placeholder="message" autocomplete="off" required />
        <button type="submit">Send</button>
      </form>
    </div>
  `;
  const feed = container.querySelector(".chat-feed");
  const form = container.querySelector(".chat-form");
  const nameInput = container.querySelector(".chat-name");
  const textInput = container.querySelector(".chat-text");
  nameInput.value = "user-" + wrapper.clientID.slice(0, 8);

  function render() {
    feed.innerHTML = "";
    for (const record of wrapper.messageHistory) {
      const payload = record.payload;
      if (!payload || typeof payload.text !== "string") continue;
      const item = document.createElement("li");
      item.className =
        record.senderID === wrapper.clientID ? "chat-message chat-mine" : "chat-message chat-theirs";
      const sender = document.createElement("span");
      sender.className = "chat-sender";
      sender.textContent = typeof payload.sender === "string" ? payload.sender : "?";
      const text = document.createElement("span");
      text.className = "chat-text-body";
      text.textContent = payload.text;
      item.append(sender, text);
      feed.appendChild(item);
    }
    feed.scrollTop = feed.scrollHeight;
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = textInput.value.trim();
    if (text === "") return;
    wrapper.sendCreateMessage({ sender: nameInput.value || "anonymous", text });
    textInput.value = "";
  });

  container.addEventListener("history-changed", render);
  render();
}
